import jax
import jax.numpy as jnp
import numpy as np
import pytest
import scipy.linalg

from sasaki import base as bg
from sasaki import bundle as tb
from sasaki.flows import FlowSettings, _richardson, flow_lie_derivatives, flow_map
from sasaki.models import make_field

from conftest import model


def test_richardson_is_exact_on_low_degree_polynomials():
    f = lambda t: 3.0 + 2.0 * t - t**2 + 0.5 * t**3 - 0.25 * t**4 + t**5
    h, levels = 0.1, 3
    vals = [f(s * h / 2**k) for k in range(levels) for s in (-1, 1)]
    assert _richardson(vals, h, levels) == pytest.approx(2.0, abs=1e-12)


def test_flow_of_linear_field_is_matrix_exponential():
    # the extension of x -> A x on the plane is linear on TM with block diag(A, A)
    M = model("euclidean:2")
    A = np.array([[0.3, -1.0], [0.5, 0.1]])
    X = bg.BaseVectorField(lambda x: jnp.asarray(A) @ x, "A")
    Z = tb.lifted_field(M, X, "ext")
    P = np.array([[0.2, -0.1, 1.0, 0.5], [1.0, 0.0, 0.0, 1.0]])
    T = np.array([0.5, -0.3])
    out = np.asarray(flow_map(M, Z, 200)(jnp.asarray(P), jnp.asarray(T)))
    big = np.kron(np.eye(2), A)
    for p, t, o in zip(P, T, out):
        assert np.allclose(o, scipy.linalg.expm(t * big) @ p, atol=1e-10)


@pytest.mark.parametrize("spec", ["sphere:1", "halfplane"])
@pytest.mark.parametrize("field", ["ext:poly:x1*x2,x2^2", "skew:[[0,1],[-1,0]]", "h:rotation:1,2", "spray"])
def test_flow_oracle_matches_formulas(spec, field):
    M = model(spec)
    Z = make_field(M, field, "tm")
    rng = np.random.default_rng(5)
    lo, hi = M.box()
    xs = rng.uniform(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo), size=(4, 2))
    vs = rng.uniform(-1, 1, size=(4, 2))
    P = np.hstack([xs, vs])
    W1, W2 = rng.normal(size=(2, 4, 4))
    lie_g, lie_B = flow_lie_derivatives(M, Z, P, W1, W2, FlowSettings())

    def formula(p, w1, w2):
        u = tb.point_from_vector(p, 2)
        a, b = tb.from_vector(w1, 2), tb.from_vector(w2, 2)
        return tb.lie_metric(M, Z, u, a, b), tb.as_vector(tb.lie_B(M, Z, u, a))

    fg, fB = jax.vmap(formula)(jnp.asarray(P), jnp.asarray(W1), jnp.asarray(W2))
    assert np.max(np.abs(lie_g - np.asarray(fg))) < 1e-5
    assert np.max(np.abs(lie_B - np.asarray(fB))) < 1e-5


def test_flow_oracle_detects_non_killing():
    M = model("euclidean:2")
    Z = make_field(M, "ext:position", "tm")
    P = np.array([[0.1, 0.2, 0.3, 0.4]])
    W = np.array([[1.0, 0.0, 0.0, 0.0]])
    lie_g, _ = flow_lie_derivatives(M, Z, P, W, W)
    # L_Z g(d1, d1) = 2 for the dilation
    assert lie_g[0] == pytest.approx(2.0, abs=1e-8)
