"""Geodesics of the Sasaki metric.

The state is ``(x, v, xdot, z)`` with ``z = vdot + Gamma(xdot, v)`` the
covariant derivative of ``v`` along the base curve.  In these variables

    xddot^p = -Gamma^p_ij xdot^i xdot^j - g^pq g(R(xdot, d_q) v, z)
    zdot    = -Gamma(xdot, z)
    vdot    = z - Gamma(xdot, v)

and the kinetic energy ``g(xdot, xdot) + g(z, z)`` is conserved.
Integration is classical fixed-step RK4 with one jitted step per model.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, TextIO, Union

import jax
import jax.numpy as jnp
import numpy as np

from .base import ChartedManifold, christoffel_symbols, metric_tensor, riemann_lowered


class DomainExit(RuntimeError):
    """The base point left the chart box; ``trajectory`` holds the valid prefix."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


class NonFinite(RuntimeError):
    """The state stopped being finite; ``trajectory`` holds the valid prefix."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


class GeodesicState(NamedTuple):
    x: jax.Array
    v: jax.Array
    xdot: jax.Array
    z: jax.Array


def state(x, v, xdot, z) -> GeodesicState:
    return GeodesicState(*(jnp.asarray(a, dtype=float) for a in (x, v, xdot, z)))


def state_from_vdot(M: ChartedManifold, x, v, xdot, vdot) -> GeodesicState:
    """Build a state from ``vdot`` instead of ``z``."""
    s = state(x, v, xdot, vdot)
    G = christoffel_symbols(M, s.x)
    return s._replace(z=s.z + jnp.einsum("bia,i,a->b", G, s.xdot, s.v))


def geodesic_rhs(M: ChartedManifold, s: GeodesicState) -> GeodesicState:
    """Time derivative of the state (traceable; no domain check)."""
    g = metric_tensor(M, s.x)
    G = christoffel_symbols(M, s.x)
    Rl = riemann_lowered(M, s.x)
    # g(R(xdot, d_q) v, z) = R_bjiq z^b v^j xdot^i
    force = jnp.einsum("bjiq,b,j,i->q", Rl, s.z, s.v, s.xdot)
    xddot = -jnp.einsum("pij,i,j->p", G, s.xdot, s.xdot) - jnp.linalg.solve(g, force)
    zdot = -jnp.einsum("aib,i,b->a", G, s.xdot, s.z)
    vdot = s.z - jnp.einsum("bia,i,a->b", G, s.xdot, s.v)
    return GeodesicState(s.xdot, vdot, xddot, zdot)


def energy(M: ChartedManifold, s: GeodesicState) -> jax.Array:
    g = metric_tensor(M, s.x)
    return s.xdot @ g @ s.xdot + s.z @ g @ s.z


def vdot(M: ChartedManifold, s: GeodesicState) -> jax.Array:
    return geodesic_rhs(M, s).v


def _rk4(f, s, h):
    def axpy(a, k):
        return GeodesicState(*(si + a * ki for si, ki in zip(s, k)))

    k1 = f(s)
    k2 = f(axpy(h / 2, k1))
    k3 = f(axpy(h / 2, k2))
    k4 = f(axpy(h, k3))
    return GeodesicState(
        *(si + h / 6 * (a + 2 * b + 2 * c + d) for si, a, b, c, d in zip(s, k1, k2, k3, k4))
    )


_STEP_CACHE: dict = {}


def rk4_step(M: ChartedManifold):
    """Jitted ``(state, h) -> (next state, energy of next state)`` for ``M``."""
    key = id(M)
    hit = _STEP_CACHE.get(key)
    if hit is not None and hit[0] is M:
        return hit[1]

    @jax.jit
    def step(s, h):
        nxt = _rk4(lambda q: geodesic_rhs(M, q), s, h)
        return nxt, energy(M, nxt)

    _STEP_CACHE[key] = (M, step)
    return step


@dataclass
class Trajectory:
    """Sampled Sasaki geodesic; arrays are indexed by step."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    xdot: np.ndarray
    z: np.ndarray
    energy: np.ndarray
    exit_reason: Optional[str] = None

    def __len__(self):
        return len(self.t)

    def state(self, k: int = -1) -> GeodesicState:
        return state(self.x[k], self.v[k], self.xdot[k], self.z[k])

    @property
    def energy_drift(self) -> float:
        """Maximum relative deviation of the energy from its initial value."""
        e0 = self.energy[0]
        scale = abs(e0) if e0 != 0 else 1.0
        return float(np.max(np.abs(self.energy - e0)) / scale)


def _finish(rows, reason=None) -> Trajectory:
    t, x, v, xd, z, e = (np.asarray(c) for c in zip(*rows))
    return Trajectory(t, x, v, xd, z, e, reason)


def integrate(M: ChartedManifold, s0: GeodesicState, T: float, dt: float) -> Trajectory:
    """Classical RK4 from ``t = 0`` to exactly ``t = T`` with step ``dt``.

    The last step is shortened so the final time is exactly ``T``.  Raises
    DomainExit or NonFinite with the valid prefix attached.
    """
    if not (dt > 0 and T > 0):
        raise ValueError("T and dt must be positive")
    s = GeodesicState(*(jnp.asarray(np.asarray(a, float)) for a in s0))
    x0 = np.asarray(s.x)
    if not M.contains(x0):
        raise DomainExit(f"initial point {x0} outside the chart of {M.name}", _finish([(0.0, x0, s.v, s.xdot, s.z, np.nan)]))
    if M.periods is not None:
        s = s._replace(x=jnp.asarray(M.wrap(x0)))
    step = rk4_step(M)
    nsteps = max(1, math.ceil(T / dt - 1e-9))
    rows = [(0.0, *(np.asarray(a) for a in s), float(energy(M, s)))]
    for k in range(1, nsteps + 1):
        h = dt if k < nsteps else T - (nsteps - 1) * dt
        nxt, e = step(s, h)
        arrs = [np.asarray(a) for a in nxt]
        t = T if k == nsteps else k * dt
        if not all(np.all(np.isfinite(a)) for a in arrs) or not np.isfinite(float(e)):
            raise NonFinite(f"non-finite state at t = {t:.17g}", _finish(rows, "NonFinite"))
        if M.periods is not None:
            arrs[0] = M.wrap(arrs[0])
            nxt = nxt._replace(x=jnp.asarray(arrs[0]))
        elif not M.contains(arrs[0]):
            raise DomainExit(
                f"left the chart of {M.name} at t = {t:.17g}, x = {arrs[0]}", _finish(rows, "DomainExit")
            )
        rows.append((t, *arrs, float(e)))
        s = nxt
    return _finish(rows)


def submarine_projection(traj: Trajectory) -> np.ndarray:
    """The base curve ``x(t)`` of a Sasaki geodesic."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return traj.x.copy()


def unwrap(M: ChartedManifold, xs: np.ndarray) -> np.ndarray:
    """Undo chart wrapping so a torus curve is continuous."""
    if M.periods is None:
        return xs
    p = np.asarray(M.periods, float)
    d = np.diff(xs, axis=0)
    d -= p * np.round(d / p)
    return np.concatenate([xs[:1], xs[:1] + np.cumsum(d, axis=0)])


def base_geodesic_defect(M: ChartedManifold, t: np.ndarray, xs: np.ndarray) -> float:
    """``max |xddot + Gamma(xdot, xdot)|`` along a sampled base curve.

    Velocities and accelerations come from second-order central differences on
    the uniformly spaced part of the sample, so the result is ``O(dt^2)`` for a
    true geodesic.
    """
    xs = unwrap(M, np.asarray(xs, float))
    t = np.asarray(t, float)
    h = t[1] - t[0]
    n = len(t)
    while n > 3 and not np.isclose(t[n - 1] - t[n - 2], h, rtol=1e-9, atol=0):
        n -= 1
    if n < 3:
        raise ValueError("need at least three uniformly spaced samples")
    xs = xs[:n]
    vel = (xs[2:] - xs[:-2]) / (2 * h)
    acc = (xs[2:] - 2 * xs[1:-1] + xs[:-2]) / h**2
    gam = jax.vmap(lambda y: christoffel_symbols(M, y))(jnp.asarray(M.wrap(xs[1:-1])))
    res = acc + np.einsum("npij,ni,nj->np", np.asarray(gam), vel, vel)
    return float(np.max(np.abs(res)))


def base_geodesic_integrate(M: ChartedManifold, x0, xdot0, v0, T: float, dt: float) -> Trajectory:
    """A base geodesic with a parallel vector along it, integrated directly.

    Solves ``xddot = -Gamma(xdot, xdot)``, ``vdot = -Gamma(xdot, v)`` with RK4
    using only the base Christoffel symbols.  The result is packaged as a
    trajectory with ``z = 0``, for comparison against the Sasaki system.
    """
    gamma = jax.jit(lambda y: christoffel_symbols(M, y))
    metric = jax.jit(lambda y: metric_tensor(M, y))

    def f(y):
        x, xd, v = np.split(y, 3)
        G = np.asarray(gamma(jnp.asarray(x)))
        return np.concatenate([xd, -np.einsum("pij,i,j->p", G, xd, xd), -np.einsum("pij,i,j->p", G, xd, v)])

    y = np.concatenate([np.asarray(a, float) for a in (x0, xdot0, v0)])
    m = M.dim
    nsteps = max(1, math.ceil(T / dt - 1e-9))
    ts, ys = [0.0], [y]
    for k in range(1, nsteps + 1):
        h = dt if k < nsteps else T - (nsteps - 1) * dt
        k1 = f(y)
        k2 = f(y + h / 2 * k1)
        k3 = f(y + h / 2 * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if M.periods is not None:
            y[:m] = M.wrap(y[:m])
        ts.append(T if k == nsteps else k * dt)
        ys.append(y)
    Y = np.asarray(ys)
    x, xd, v = Y[:, :m], Y[:, m : 2 * m], Y[:, 2 * m :]
    e = np.array([xi @ np.asarray(metric(jnp.asarray(p))) @ xi for p, xi in zip(x, xd)])
    return Trajectory(np.asarray(ts), x, v, xd, np.zeros_like(v), e)


def csv_header(m: int) -> str:
    cols = ["t"]
    for name in ("x", "v", "xdot", "z"):
        cols += [f"{name}{i + 1}" for i in range(m)]
    return ",".join(cols + ["energy"])


def write_csv(traj: Trajectory, dest: Union[str, TextIO]) -> None:
    """Write ``t,x..,v..,xdot..,z..,energy`` rows with 17 significant digits.

    A trailing ``# DomainExit`` (or ``# NonFinite``) comment marks a truncated run.
    """
    m = traj.x.shape[1]
    data = np.column_stack([traj.t, traj.x, traj.v, traj.xdot, traj.z, traj.energy])
    buf = io.StringIO()
    buf.write(csv_header(m) + "\n")
    for row in data:
        buf.write(",".join(f"{val:.17g}" for val in row) + "\n")
    if traj.exit_reason:
        buf.write(f"# {traj.exit_reason}\n")
    if isinstance(dest, str):
        with open(dest, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        dest.write(buf.getvalue())


def read_csv(path: str) -> tuple[np.ndarray, Optional[str]]:
    """Load a trajectory CSV as a float array plus the exit comment, if any."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    note = None
    if lines and lines[-1].startswith("#"):
        note = lines.pop()[1:].strip()
    return np.loadtxt(lines[1:], delimiter=",", ndmin=2), note
