import io
import math

import jax
import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from sasaki import base as bg
from sasaki import bundle as tb
from sasaki import geodesics as gd
from sasaki.suites import generic_state, rk4_ratio

from conftest import MODEL_SPECS, model, random_point

small = st.floats(-1.0, 1.0)


@pytest.mark.parametrize("spec", MODEL_SPECS)
@given(data=st.lists(small, min_size=6, max_size=6), frac=st.tuples(st.floats(0.1, 0.9), st.floats(0.1, 0.9)))
def test_rhs_matches_chart_geodesic_equation(spec, data, frac):
    # second derivatives (xddot, vddot) against -Gamma(pdot, pdot) of the Sasaki chart metric
    M = model(spec)
    TM = tb.sasaki_chart_manifold(M)
    lo, hi = M.box()
    x = lo + np.asarray(frac) * (hi - lo)
    v, xd, z = np.asarray(data).reshape(3, 2)
    s = gd.state(x, v, xd, z)
    rhs = gd.geodesic_rhs(M, s)
    _, drhs = jax.jvp(lambda q: gd.geodesic_rhs(M, q).v, (s,), (rhs,))
    p = jnp.concatenate([s.x, s.v])
    pdot = jnp.concatenate([s.xdot, rhs.v])
    acc = -jnp.einsum("kij,i,j->k", bg.christoffel_symbols(TM, p), pdot, pdot)
    got = jnp.concatenate([rhs.xdot, drhs])
    assert np.max(np.abs(got - acc)) < 1e-9 * max(1.0, float(jnp.max(jnp.abs(acc))))


@pytest.mark.parametrize("spec", MODEL_SPECS)
def test_energy_is_conserved(spec):
    M = model(spec)
    tr = gd.integrate(M, generic_state(M), 1.0, 1e-3)
    assert tr.energy_drift < 1e-6
    assert tr.t[-1] == 1.0 and len(tr) == 1001


def test_straight_line_in_the_plane():
    M = model("euclidean:2")
    s0 = gd.state([0.1, -0.2], [1.0, 0.5], [0.3, 0.4], [-0.2, 0.1])
    tr = gd.integrate(M, s0, 2.0, 1e-2)
    t = tr.t[:, None]
    assert np.max(np.abs(tr.x - (np.array([0.1, -0.2]) + t * [0.3, 0.4]))) < 1e-12
    assert np.max(np.abs(tr.v - (np.array([1.0, 0.5]) + t * [-0.2, 0.1]))) < 1e-12


def test_great_circle_closes_up():
    M = model("sphere:1")
    s0 = gd.state([1.0, 0.0], [0.3, 0.2], [0.0, 1.0], [0.0, 0.0])
    tr = gd.integrate(M, s0, 2 * math.pi, 1e-3)
    assert np.max(np.abs(tr.x[-1] - [1.0, 0.0])) < 1e-6
    assert np.max(np.abs(tr.v[-1] - [0.3, 0.2])) < 1e-6
    # the base curve stays on the unit circle of the chart
    assert np.max(np.abs(np.linalg.norm(tr.x, axis=1) - 1.0)) < 1e-9


def test_halfplane_vertical_line():
    M = model("halfplane")
    tr = gd.integrate(M, gd.state([0.0, 1.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]), 1.0, 1e-3)
    assert np.max(np.abs(tr.x[:, 1] - np.exp(tr.t))) < 1e-9


@pytest.mark.parametrize("spec", ["sphere:1", "halfplane"])
def test_rk4_convergence_order(spec):
    r = rk4_ratio(model(spec), generic_state(model(spec)))
    assert 12.0 <= r <= 20.0


@pytest.mark.parametrize("spec", MODEL_SPECS)
def test_natural_lift_is_sasaki_geodesic(spec):
    # z = 0 stays zero and (x, v) follows the base geodesic with v parallel
    M = model(spec)
    s0 = generic_state(M)._replace(z=jnp.zeros(M.dim))
    tr = gd.integrate(M, s0, 1.0, 1e-3)
    ref = gd.base_geodesic_integrate(M, s0.x, s0.xdot, s0.v, 1.0, 1e-3)
    dx = gd.unwrap(M, tr.x) - gd.unwrap(M, ref.x)
    assert np.max(np.abs(dx)) < 1e-7
    assert np.max(np.abs(tr.v - ref.v)) < 1e-7
    assert np.max(np.abs(tr.z)) == 0.0
    assert gd.base_geodesic_defect(M, tr.t, gd.submarine_projection(tr)) < 1e-4


def test_submarine_projection_is_not_a_geodesic_in_general():
    M = model("sphere:1")
    s0 = gd.state([0.2, 0.1], [1.0, 0.0], [0.5, 0.2], [0.0, 2.0])
    tr = gd.integrate(M, s0, 1.0, 1e-3)
    assert gd.base_geodesic_defect(M, tr.t, tr.x) > 1e-2


@pytest.mark.parametrize("spec", MODEL_SPECS)
def test_fibre_lines(spec):
    M = model(spec)
    s0 = generic_state(M)._replace(xdot=jnp.zeros(M.dim))
    tr = gd.integrate(M, s0, 1.0, 1e-2)
    assert np.max(np.abs(tr.x - tr.x[0])) == 0.0
    assert np.max(np.abs(tr.v - (np.asarray(s0.v) + tr.t[:, None] * np.asarray(s0.z)))) < 1e-12


def test_state_from_vdot():
    M = model("sphere:1")
    x, v, xd, z = [0.3, 0.1], [0.5, -0.2], [1.0, 0.4], [0.2, 0.7]
    s = gd.state(x, v, xd, z)
    vdot = gd.vdot(M, s)
    s2 = gd.state_from_vdot(M, x, v, xd, vdot)
    assert np.allclose(s2.z, z, atol=1e-14)


def test_last_step_lands_on_T():
    M = model("euclidean:2")
    tr = gd.integrate(M, gd.state([0, 0], [0, 0], [1, 0], [0, 0]), 1.0, 0.3)
    assert np.allclose(tr.t, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert tr.x[-1, 0] == pytest.approx(1.0, abs=1e-15)


def test_domain_exit_keeps_prefix():
    M = model("halfplane")
    with pytest.raises(gd.DomainExit) as err:
        gd.integrate(M, gd.state([0.0, 1.0], [0.0, 0.0], [0.0, -1.0], [0.0, 0.0]), 5.0, 1e-2)
    tr = err.value.trajectory
    assert tr.exit_reason == "DomainExit"
    assert np.all(tr.x[:, 1] >= 0.1) and tr.t[-1] < 5.0
    assert tr.t[-1] == pytest.approx(math.log(10.0), abs=2e-2)


def test_initial_point_outside():
    with pytest.raises(gd.DomainExit):
        gd.integrate(model("halfplane"), gd.state([0.0, 0.01], [0, 0], [0, 1], [0, 0]), 1.0, 1e-2)


def test_non_finite_state():
    M = bg.ChartedManifold(1, "blowup", lambda x: jnp.exp(-40 * x[:1, None] ** 2), (-1e9,), (1e9,), (0.0,))
    with pytest.raises(gd.NonFinite) as err:
        gd.integrate(M, gd.state([0.3], [0.0], [1e200], [0.0]), 1.0, 0.5)
    assert err.value.trajectory.exit_reason == "NonFinite"


def test_bad_step_sizes():
    M = model("euclidean:2")
    s = gd.state([0, 0], [0, 0], [1, 0], [0, 0])
    with pytest.raises(ValueError):
        gd.integrate(M, s, 1.0, 0.0)
    with pytest.raises(ValueError):
        gd.integrate(M, s, -1.0, 0.1)


def test_torus_wraps_and_unwraps():
    M = model("torus:2")
    tr = gd.integrate(M, gd.state([6.0, 0.0], [0, 0], [1.0, 0.0], [0, 0]), 2.0, 0.1)
    assert np.all((tr.x >= 0) & (tr.x < 2 * math.pi))
    un = gd.unwrap(M, tr.x)
    assert un[-1, 0] == pytest.approx(8.0, abs=1e-12)


def test_csv_roundtrip(tmp_path):
    M = model("sphere:1")
    tr = gd.integrate(M, generic_state(M), 0.05, 1e-2)
    path = str(tmp_path / "t.csv")
    gd.write_csv(tr, path)
    data, note = gd.read_csv(path)
    assert note is None
    assert data.shape == (len(tr), 1 + 4 * 2 + 1)
    assert np.array_equal(data[:, 1:3], tr.x)  # 17 digits round-trip exactly
    with open(path) as fh:
        assert fh.readline().strip() == "t,x1,x2,v1,v2,xdot1,xdot2,z1,z2,energy"


def test_csv_marks_truncation():
    M = model("halfplane")
    try:
        gd.integrate(M, gd.state([0.0, 0.2], [0, 0], [0.0, -1.0], [0, 0]), 5.0, 1e-1)
    except gd.DomainExit as exc:
        buf = io.StringIO()
        gd.write_csv(exc.trajectory, buf)
        assert buf.getvalue().rstrip().endswith("# DomainExit")
    else:
        pytest.fail("expected a domain exit")
