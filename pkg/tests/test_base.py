import jax
import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from sasaki import base as bg
from sasaki.models import make_field

from conftest import MODEL_SPECS, model, random_point

unit = st.floats(0.0, 1.0)


def point_in(M, fracs):
    lo, hi = M.box()
    return lo + np.asarray(fracs) * (hi - lo)


def fd_christoffel(M, x, h=1e-5):
    """Christoffel symbols from a finite-difference metric derivative."""
    dg = bg.central_difference(lambda y: np.asarray(M.metric(jnp.asarray(y))), x, h)  # dg[i, j, k] = d_k g_ij
    gi = np.linalg.inv(np.asarray(M.metric(jnp.asarray(x))))
    t = np.einsum("ilj->ijl", dg) + np.einsum("jli->ijl", dg) - np.einsum("ijl->ijl", dg)
    return 0.5 * np.einsum("kl,ijl->kij", gi, t)


@pytest.mark.parametrize("spec", MODEL_SPECS)
@given(fracs=st.tuples(unit, unit))
def test_christoffel_symmetric_and_compatible(spec, fracs):
    M = model(spec)
    x = jnp.asarray(point_in(M, fracs))
    G = np.asarray(bg.christoffel_symbols(M, x))
    assert np.max(np.abs(G - G.transpose(0, 2, 1))) < 1e-12
    # nabla g = 0: d_k g_ij = g_lj G^l_ki + g_il G^l_kj
    g = np.asarray(bg.metric_tensor(M, x))
    dg = np.asarray(bg.metric_derivative(M, x))
    rhs = np.einsum("lj,lki->kij", g, G) + np.einsum("il,lkj->kij", g, G)
    assert np.max(np.abs(dg - rhs)) < 1e-9 * max(1.0, np.max(np.abs(dg)))


@pytest.mark.parametrize("spec", MODEL_SPECS)
def test_christoffel_matches_finite_differences(spec, rng):
    M = model(spec)
    x = random_point(M, rng)
    G = np.asarray(bg.christoffel_symbols(M, jnp.asarray(x)))
    scale = max(1.0, np.max(np.abs(G)))
    assert np.max(np.abs(G - fd_christoffel(M, x))) < 1e-6 * scale


@pytest.mark.parametrize("spec", MODEL_SPECS)
@given(fracs=st.tuples(unit, unit))
def test_curvature_symmetries_and_bianchi(spec, fracs):
    M = model(spec)
    x = point_in(M, fracs)
    C = bg.curvature(M, x)
    Rl, R = C.riem_low, C.riem
    s = max(1.0, np.max(np.abs(Rl)))
    assert np.max(np.abs(Rl + Rl.transpose(1, 0, 2, 3))) < 1e-9 * s
    assert np.max(np.abs(Rl + Rl.transpose(0, 1, 3, 2))) < 1e-9 * s
    assert np.max(np.abs(Rl - Rl.transpose(2, 3, 0, 1))) < 1e-9 * s
    bianchi = R + np.einsum("lijk->lkij", R) + np.einsum("ljki->lkij", R)
    assert np.max(np.abs(bianchi)) < 1e-9 * max(1.0, np.max(np.abs(R)))


@pytest.mark.parametrize("spec,scal", [("sphere:1", 2.0), ("halfplane", -2.0), ("sphere:0.5", 1.0), ("sphere:1,3", 6.0)])
def test_constant_curvature_oracle(spec, scal, rng):
    # R_kpij = c (g_ki g_pj - g_kj g_pi)
    M = model(spec)
    c = M.curvature
    for _ in range(5):
        x = random_point(M, rng)
        C = bg.curvature(M, x)
        g = np.asarray(M.metric(jnp.asarray(x)))
        oracle = c * (np.einsum("ki,pj->kpij", g, g) - np.einsum("kj,pi->kpij", g, g))
        assert np.max(np.abs(C.riem_low - oracle)) < 1e-8 * max(1.0, np.max(np.abs(oracle)))
        assert abs(C.scal - scal) < 1e-8


def test_euclidean_three_is_flat(rng):
    M = model("euclidean:3")
    for _ in range(3):
        x = random_point(M, rng)
        assert np.all(bg.christoffel(M, x).gamma == 0.0)
        assert bg.curvature(M, x).scal == 0.0


def test_metric_jet_shapes_and_inverse():
    M = model("sphere:1")
    J = bg.metric_jet(M, [0.3, -0.2])
    assert J.dg.shape == (2, 2, 2) and J.d2g.shape == (2, 2, 2, 2)
    assert np.allclose(J.g @ J.ginv, np.eye(2), atol=1e-12)
    # second derivative is symmetric in the two derivative slots
    assert np.allclose(J.d2g, J.d2g.transpose(1, 0, 2, 3), atol=1e-12)


def test_non_positive_definite_metric_raises():
    M = bg.ChartedManifold(2, "bad", lambda x: jnp.diag(jnp.array([1.0, -1.0])) + 0.0 * x[0], (-1, -1), (1, 1), (0, 0))
    with pytest.raises(bg.NonPositiveDefinite):
        bg.metric_jet(M, [0.0, 0.0])


def test_point_shape_is_checked():
    with pytest.raises(ValueError):
        bg.christoffel(model("sphere:1"), [0.0, 0.0, 0.0])


@pytest.mark.parametrize("spec", ["euclidean:2", "sphere:1", "halfplane"])
def test_orthonormal_frame(spec, rng):
    M = model(spec)
    x = jnp.asarray(random_point(M, rng))
    E = np.asarray(bg.orthonormal_frame(M, x))
    g = np.asarray(bg.metric_tensor(M, x))
    assert np.allclose(E.T @ g @ E, np.eye(2), atol=1e-12)


@pytest.mark.parametrize(
    "spec,field,killing",
    [
        ("euclidean:2", "rotation:1,2", True),
        ("euclidean:2", "const:1,0", True),
        ("euclidean:2", "position", False),
        ("sphere:1", "rotation:1,2", True),
        ("sphere:1", "const:1,0", False),
        ("sphere:1", "poly:1+x1^2-x2^2,2*x1*x2", True),
        ("halfplane", "const:1,0", True),
        ("halfplane", "position", True),
        ("halfplane", "poly:x1^2-x2^2,2*x1*x2", True),
        ("halfplane", "const:0,1", False),
    ],
)
def test_base_killing_fields(spec, field, killing, rng):
    M = model(spec)
    X = make_field(M, field, "base")
    worst = max(np.max(np.abs(bg.killing_defect_base(M, X, random_point(M, rng)))) for _ in range(4))
    assert (worst < 1e-9) == killing
    if killing:
        assert abs(bg.divergence_base(M, X, random_point(M, rng))) < 1e-9


def test_divergence_of_position_field():
    M = model("euclidean:3")
    X = make_field(M, "position", "base")
    assert bg.divergence_base(M, X, [0.1, 0.2, 0.3]) == pytest.approx(3.0, abs=1e-14)


def test_second_covariant_derivative_of_quadratic():
    # X = (x^2, 0) has nabla^2 X(d1, d1) = (2, 0) on the plane
    M = model("euclidean:2")
    X = make_field(M, "poly:x1^2,0", "base")
    N, H = bg.covariant_jet(M, X, [0.5, -0.3])
    assert np.allclose(N, [[1.0, 0.0], [0.0, 0.0]])
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 2.0
    assert np.allclose(H, expected, atol=1e-14)


@pytest.mark.parametrize("spec", ["sphere:1", "halfplane"])
def test_second_covariant_derivative_jet_path(spec, rng):
    # a field supplying its own jet must agree with the AD path
    M = model(spec)
    X = make_field(M, "poly:x1*x2,x1^2-x2", "base")
    def jet(x):
        return X(x), jax.jacfwd(X.fn)(x), jax.jacfwd(jax.jacfwd(X.fn))(x)

    Xj = bg.BaseVectorField(X.fn, "jet", jet)
    x = random_point(M, rng)
    assert np.allclose(bg.covariant_jet(M, X, x)[1], bg.covariant_jet(M, Xj, x)[1], atol=1e-10)


def test_ricci_identity_for_second_derivative(rng):
    # nabla^2 X(Y,Z) - nabla^2 X(Z,Y) = R(Y,Z) X on the sphere
    M = model("sphere:1")
    X = make_field(M, "poly:x1*x2,x1^2-x2", "base")
    x = random_point(M, rng) / 3
    _, H = bg.covariant_jet(M, X, x)
    R = bg.curvature(M, x).riem
    Xx = np.asarray(X(jnp.asarray(x)))
    lhs = H - H.transpose(0, 2, 1)
    rhs = np.einsum("lkij,k->lij", R, Xx)
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * max(1.0, np.max(np.abs(rhs)))


def test_sample_bundle_is_seeded_and_starts_on_zero_section():
    M = model("sphere:1")
    xs1, vs1 = bg.sample_bundle(M, 8, 42)
    xs2, vs2 = bg.sample_bundle(M, 8, 42)
    assert np.array_equal(xs1, xs2) and np.array_equal(vs1, vs2)
    assert np.all(vs1[0] == 0.0)
    lo, hi = M.box()
    assert np.all((xs1 >= lo) & (xs1 <= hi))


def test_torus_wraps_and_accepts_everything():
    M = model("torus:2")
    assert M.contains([100.0, -7.0])
    w = M.wrap(np.array([2 * np.pi + 0.5, -0.25]))
    assert np.allclose(w, [0.5, 2 * np.pi - 0.25])


def test_halfplane_margin():
    M = model("halfplane")
    assert not M.contains([0.0, 0.05])
    assert M.contains([0.0, 0.1])
    assert not M.contains([np.nan, 1.0])
