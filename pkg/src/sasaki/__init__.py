"""Sasaki-metric geometry on tangent bundles of charted Riemannian manifolds.

Every derivative is taken by forward-mode automatic differentiation, so the
tensor identities hold to rounding error and can be checked at tight
tolerances.
"""

import jax

jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"
