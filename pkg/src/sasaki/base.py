"""Pointwise Riemannian geometry on a single coordinate chart.

Tensor layouts used throughout (all indices are chart indices):

* ``dg[k, i, j]``        = d_k g_ij
* ``d2g[l, k, i, j]``    = d_l d_k g_ij
* ``gamma[k, i, j]``     = Gamma^k_ij, with nabla_i d_j = Gamma^k_ij d_k
* ``dgamma[l, k, i, j]`` = d_l Gamma^k_ij
* ``riem[l, k, i, j]``   = R^l_kij, with R(d_i, d_j) d_k = R^l_kij d_l
* ``riem_low[k, p, i, j]`` = g(R(d_i, d_j) d_p, d_k)

Curvature follows R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y].  Derivatives
come from nested ``jax.jacfwd`` calls (forward over forward); nothing here
uses finite differences.

The lower-case helpers (``metric_tensor``, ``christoffel_symbols``, ...) are
traceable and return jax arrays so they can sit inside further derivatives.
The ``metric_jet``/``christoffel``/``curvature`` operations return frozen
records of numpy arrays and validate the point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import jax
import jax.numpy as jnp
import numpy as np

Array = jax.Array


class NonPositiveDefinite(ValueError):
    """The metric is not positive definite at the requested chart point."""


class OutOfDomain(ValueError):
    """A chart point lies outside the model's valid box."""


@dataclass(frozen=True, eq=False)
class ChartedManifold:
    """A Riemannian manifold described by one coordinate chart.

    ``metric`` maps a length-``dim`` chart point to the symmetric metric
    matrix and must be written with ``jax.numpy`` so it can be differentiated.
    The valid region is the box ``[lower + margin, upper - margin]``; when
    ``periods`` is given the chart wraps and every finite point is valid.
    ``curvature`` records the sectional curvature of constant-curvature
    models and is only used by oracle checks.
    """

    dim: int
    name: str
    metric: Callable[[Array], Array]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    margin: tuple[float, ...]
    periods: Optional[tuple[float, ...]] = None
    curvature: Optional[float] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        for seq in (self.lower, self.upper, self.margin):
            if len(seq) != self.dim:
                raise ValueError("box bounds must have one entry per axis")
        lo, hi = self.box()
        if np.any(lo >= hi):
            raise ValueError(f"empty sampling box for {self.name}")

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        """Sampling box with margins applied."""
        lo = np.asarray(self.lower, float) + np.asarray(self.margin, float)
        hi = np.asarray(self.upper, float) - np.asarray(self.margin, float)
        return lo, hi

    def contains(self, x) -> bool:
        x = np.asarray(x, float)
        if not np.all(np.isfinite(x)):
            return False
        if self.periods is not None:
            return True
        lo, hi = self.box()
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def wrap(self, x):
        """Reduce a point modulo the chart periods (identity if none)."""
        if self.periods is None:
            return x
        lo = np.asarray(self.lower, float)
        p = np.asarray(self.periods, float)
        return lo + np.mod(np.asarray(x, float) - lo, p)


@dataclass(frozen=True, eq=False)
class BaseVectorField:
    """A vector field on the chart, ``fn(x) -> (m,)`` written in jax.numpy.

    ``jet`` optionally supplies ``x -> (X, dX, d2X)`` with ``dX[i, j] = d_j X^i``
    and ``d2X[i, j, k] = d_j d_k X^i``; when present it replaces AD of ``fn``.
    """

    fn: Callable[[Array], Array]
    name: str = "X"
    jet: Optional[Callable[[Array], tuple[Array, Array, Array]]] = None

    def __call__(self, x):
        return self.fn(x)


@dataclass(frozen=True)
class MetricJet:
    g: np.ndarray
    ginv: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray
    basepoint: np.ndarray


@dataclass(frozen=True)
class ChristoffelData:
    gamma: np.ndarray
    dgamma: np.ndarray


@dataclass(frozen=True)
class CurvatureData:
    riem: np.ndarray
    riem_low: np.ndarray
    ric: np.ndarray
    scal: float


# ---------------------------------------------------------------------------
# traceable kernels


def metric_tensor(M: ChartedManifold, x) -> Array:
    return jnp.asarray(M.metric(x))


def metric_derivative(M: ChartedManifold, x) -> Array:
    """``dg[k, i, j] = d_k g_ij``."""
    return jnp.moveaxis(jax.jacfwd(M.metric)(x), -1, 0)


def metric_second_derivative(M: ChartedManifold, x) -> Array:
    """``d2g[l, k, i, j] = d_l d_k g_ij``."""
    h = jax.jacfwd(jax.jacfwd(M.metric))(x)  # h[i, j, k, l] = d_l d_k g_ij
    return jnp.einsum("ijkl->lkij", h)


_KERNELS: dict = {}


def _kernel(name: str, M: ChartedManifold, fn: Callable) -> Callable:
    """Per-model jitted kernel; JAX caches compiled versions per transformation."""
    key = (name, id(M))
    hit = _KERNELS.get(key)
    if hit is None or hit[0] is not M:
        hit = (M, jax.jit(lambda x: fn(M, x)))
        _KERNELS[key] = hit
    return hit[1]


def christoffel_symbols(M: ChartedManifold, x) -> Array:
    return _kernel("gamma", M, _christoffel)(x)


def _christoffel(M: ChartedManifold, x) -> Array:
    g = metric_tensor(M, x)
    dg = metric_derivative(M, x)
    t = dg + jnp.einsum("jil->ijl", dg) - jnp.einsum("lij->ijl", dg)
    return 0.5 * jnp.einsum("kl,ijl->kij", jnp.linalg.inv(g), t)


def christoffel_derivative(M: ChartedManifold, x) -> Array:
    """``dgamma[l, k, i, j] = d_l Gamma^k_ij``."""
    d = jax.jacfwd(lambda y: christoffel_symbols(M, y))(x)
    return jnp.moveaxis(d, -1, 0)


def riemann_tensor(M: ChartedManifold, x) -> Array:
    """``R^l_kij``: the (3,1) curvature tensor."""
    return _kernel("riemann", M, _riemann)(x)


def _riemann(M: ChartedManifold, x) -> Array:
    G = christoffel_symbols(M, x)
    dG = christoffel_derivative(M, x)
    return (
        jnp.einsum("iljk->lkij", dG)
        - jnp.einsum("jlik->lkij", dG)
        + jnp.einsum("lip,pjk->lkij", G, G)
        - jnp.einsum("ljp,pik->lkij", G, G)
    )


def riemann_lowered(M: ChartedManifold, x) -> Array:
    """``R_kpij = g(R(d_i, d_j) d_p, d_k)``."""
    return jnp.einsum("kl,lpij->kpij", metric_tensor(M, x), riemann_tensor(M, x))


def ricci_tensor(M: ChartedManifold, x) -> Array:
    return jnp.einsum("ikij->jk", riemann_tensor(M, x))


def scalar_curvature(M: ChartedManifold, x) -> Array:
    ginv = jnp.linalg.inv(metric_tensor(M, x))
    return jnp.einsum("jk,jk->", ginv, ricci_tensor(M, x))


def gamma_contract(G: Array, a, b) -> Array:
    """``Gamma(a, b)^k = Gamma^k_ij a^i b^j``."""
    return jnp.einsum("kij,i,j->k", G, a, b)


def orthonormal_frame(M: ChartedManifold, x) -> Array:
    """Gram-Schmidt of ``d_1, ..., d_m`` in index order; columns are the frame."""
    g = metric_tensor(M, x)
    L = jnp.linalg.cholesky(g)
    return jnp.linalg.inv(L).T


def _field_derivative(X: BaseVectorField, x) -> Array:
    if X.jet is not None:
        return jnp.asarray(X.jet(x)[1])
    return jax.jacfwd(X.fn)(x)


def nabla_field(M: ChartedManifold, X: BaseVectorField, x) -> Array:
    """``N[i, j] = (nabla_j X)^i``."""
    G = christoffel_symbols(M, x)
    return _field_derivative(X, x) + jnp.einsum("ijl,l->ij", G, X(x))


def nabla2_field(M: ChartedManifold, X: BaseVectorField, x) -> Array:
    """``H[i, j, k] = (nabla^2 X(d_j, d_k))^i = (nabla_j (nabla X))(d_k)^i``."""
    G = christoffel_symbols(M, x)
    N = nabla_field(M, X, x)
    if X.jet is not None:
        _, dX, d2X = X.jet(x)
        dG = christoffel_derivative(M, x)
        # dN[i, k, j] = d_j N[i, k]
        dN = (
            jnp.einsum("ijk->ikj", jnp.asarray(d2X))
            + jnp.einsum("jikl,l->ikj", dG, X(x))
            + jnp.einsum("ikl,lj->ikj", G, jnp.asarray(dX))
        )
    else:
        dN = jax.jacfwd(lambda y: nabla_field(M, X, y))(x)
    return (
        jnp.einsum("ikj->ijk", dN)
        + jnp.einsum("ijl,lk->ijk", G, N)
        - jnp.einsum("ljk,il->ijk", G, N)
    )


def _flat(M, X, x):
    return metric_tensor(M, x) @ X(x)


# ---------------------------------------------------------------------------
# checked operations


def _as_point(M: ChartedManifold, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (M.dim,):
        raise ValueError(f"expected a point of shape ({M.dim},), got {x.shape}")
    return x


def check_positive_definite(M: ChartedManifold, x) -> np.ndarray:
    """Return ``g(x)`` as numpy, raising NonPositiveDefinite if Cholesky fails."""
    g = np.asarray(metric_tensor(M, jnp.asarray(x)))
    if not np.all(np.isfinite(g)):
        raise NonPositiveDefinite(f"non-finite metric at {x} on {M.name}")
    try:
        np.linalg.cholesky(0.5 * (g + g.T))
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefinite(f"metric not positive definite at {x} on {M.name}") from exc
    return g


def metric_jet(M: ChartedManifold, x) -> MetricJet:
    x = _as_point(M, x)
    g = check_positive_definite(M, x)
    xj = jnp.asarray(x)
    return MetricJet(
        g=g,
        ginv=np.linalg.inv(g),
        dg=np.asarray(metric_derivative(M, xj)),
        d2g=np.asarray(metric_second_derivative(M, xj)),
        basepoint=x,
    )


def christoffel(M: ChartedManifold, x) -> ChristoffelData:
    x = _as_point(M, x)
    check_positive_definite(M, x)
    xj = jnp.asarray(x)
    return ChristoffelData(
        gamma=np.asarray(christoffel_symbols(M, xj)),
        dgamma=np.asarray(christoffel_derivative(M, xj)),
    )


def curvature(M: ChartedManifold, x) -> CurvatureData:
    x = _as_point(M, x)
    check_positive_definite(M, x)
    xj = jnp.asarray(x)
    R = riemann_tensor(M, xj)
    g = metric_tensor(M, xj)
    ric = jnp.einsum("ikij->jk", R)
    return CurvatureData(
        riem=np.asarray(R),
        riem_low=np.asarray(jnp.einsum("kl,lpij->kpij", g, R)),
        ric=np.asarray(ric),
        scal=float(jnp.einsum("jk,jk->", jnp.linalg.inv(g), ric)),
    )


def covariant_jet(M: ChartedManifold, X: BaseVectorField, x) -> tuple[np.ndarray, np.ndarray]:
    """First and second covariant derivatives of ``X`` at ``x``.

    Returns ``(N, H)`` with ``N[i, j] = (nabla_j X)^i`` and
    ``H[i, j, k] = nabla^2 X(d_j, d_k)^i``.
    """
    xj = jnp.asarray(_as_point(M, x))
    return np.asarray(nabla_field(M, X, xj)), np.asarray(nabla2_field(M, X, xj))


def divergence_base(M: ChartedManifold, X: BaseVectorField, x) -> float:
    """``div X = tr(nabla X)``; Killing fields are divergence-free."""
    return float(jnp.trace(nabla_field(M, X, jnp.asarray(_as_point(M, x)))))


def killing_matrix(M: ChartedManifold, X: BaseVectorField, x) -> Array:
    gN = metric_tensor(M, x) @ nabla_field(M, X, x)
    return gN + gN.T


def killing_defect_base(M: ChartedManifold, X: BaseVectorField, x) -> np.ndarray:
    """``(L_X g)_ij = g(nabla_i X, d_j) + g(d_i, nabla_j X)``."""
    return np.asarray(killing_matrix(M, X, jnp.asarray(_as_point(M, x))))


def flat_derivative(M: ChartedManifold, X: BaseVectorField, x) -> Array:
    """``dX^flat`` as a skew matrix ``D[i, j] = d_i X_j - d_j X_i``."""
    J = jax.jacfwd(lambda y: _flat(M, X, y))(x)  # J[j, i] = d_i X_j
    return J.T - J


def harmonic_defect_base(M: ChartedManifold, X: BaseVectorField, x) -> tuple[np.ndarray, float]:
    """``(dX^flat, delta X^flat)`` with ``delta X^flat = -div X``."""
    xj = jnp.asarray(_as_point(M, x))
    return np.asarray(flat_derivative(M, X, xj)), -float(jnp.trace(nabla_field(M, X, xj)))


# ---------------------------------------------------------------------------
# sampling


def sample_points(M: ChartedManifold, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` chart points drawn uniformly from the sampling box."""
    lo, hi = M.box()
    return rng.uniform(lo, hi, size=(n, M.dim))


def sample_fibre(M: ChartedManifold, x, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """A fibre vector with orthonormal-frame coordinates uniform in ``[-scale, scale]``."""
    E = np.asarray(orthonormal_frame(M, jnp.asarray(x)))
    return E @ rng.uniform(-scale, scale, size=M.dim)


def sample_bundle(
    M: ChartedManifold, n: int, seed: int, zero_section: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded bundle samples ``(xs, vs)``; sample 0 sits on the zero section."""
    rng = np.random.default_rng(seed)
    xs = sample_points(M, n, rng)
    vs = np.stack([sample_fibre(M, x, rng) for x in xs])
    if zero_section and n > 1:
        vs[0] = 0.0
    return xs, vs


def central_difference(f: Callable, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian; derivative index is last."""
    x = np.asarray(x, float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def max_abs(*arrays: Sequence) -> float:
    return float(max(np.max(np.abs(np.asarray(a))) if np.size(a) else 0.0 for a in arrays))
