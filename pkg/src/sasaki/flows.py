"""Lie derivatives on TM from the flow of a field, by finite differences.

This is an oracle that shares nothing with the connection formulas in
``bundle``: the field is integrated with RK4 in the ``2m``-dimensional chart,
push-forwards come from central differences of the flow map, and the time
derivative at ``t = 0`` is a central difference with Richardson extrapolation
over successively halved horizons.
"""

from __future__ import annotations

from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from .base import ChartedManifold
from .bundle import (
    TMVectorField,
    as_vector,
    mirror_apply,
    point_from_vector,
    sasaki_matrix,
    ttvector,
)


@dataclass(frozen=True)
class FlowSettings:
    horizon: float = 1e-2
    steps: int = 10
    levels: int = 3
    eps: float = 1e-4


def flow_map(M: ChartedManifold, Z: TMVectorField, steps: int):
    """Jitted batched flow ``(P[n, 2m], T[n]) -> phi_T(P)`` with ``steps`` RK4 steps."""
    m = M.dim

    def f(p):
        return as_vector(Z(point_from_vector(p, m)))

    fb = jax.vmap(f)

    @jax.jit
    def run(P, T):
        h = (T / steps)[:, None]

        def body(_, y):
            k1 = fb(y)
            k2 = fb(y + h / 2 * k1)
            k3 = fb(y + h / 2 * k2)
            k4 = fb(y + h * k3)
            return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

        return jax.lax.fori_loop(0, steps, body, P)

    return run


_TENSOR_CACHE: dict = {}


def _chart_tensors(M: ChartedManifold):
    hit = _TENSOR_CACHE.get(id(M))
    if hit is not None and hit[0] is M:
        return hit[1]
    m = M.dim

    def gmat(p):
        return sasaki_matrix(M, point_from_vector(p, m))

    def bmat(p):
        u = point_from_vector(p, m)
        cols = [as_vector(mirror_apply(M, u, ttvector(e[:m], e[m:]), "B")) for e in jnp.eye(2 * m)]
        return jnp.stack(cols, axis=1)

    out = (jax.jit(jax.vmap(gmat)), jax.jit(jax.vmap(bmat)))
    _TENSOR_CACHE[id(M)] = (M, out)
    return out


def _richardson(values, h, levels):
    """Central differences at ``h, h/2, ...`` extrapolated to ``O(h^(2 levels))``.

    ``values`` is ordered ``[-h, h, -h/2, h/2, ...]``.
    """
    D = [(values[2 * k + 1] - values[2 * k]) / (2 * h / 2**k) for k in range(levels)]
    for j in range(1, levels):
        D = [(4**j * D[k + 1] - D[k]) / (4**j - 1) for k in range(len(D) - 1)]
    return D[0]


def flow_lie_derivatives(
    M: ChartedManifold,
    Z: TMVectorField,
    points: np.ndarray,
    W1: np.ndarray,
    W2: np.ndarray,
    settings: FlowSettings = FlowSettings(),
) -> tuple[np.ndarray, np.ndarray]:
    """``(L_Z g)(W1, W2)`` and ``(L_Z B)(W1)`` at each chart point by flowing ``Z``.

    ``points``, ``W1`` and ``W2`` have shape ``(n, 2m)``.  Returns arrays of
    shape ``(n,)`` and ``(n, 2m)``.
    """
    P = np.asarray(points, float)
    W1 = np.asarray(W1, float)
    W2 = np.asarray(W2, float)
    n, d = P.shape
    h, eps = settings.horizon, settings.eps
    flow = flow_map(M, Z, settings.steps)
    gmat, bmat = _chart_tensors(M)
    times = np.array([s * h / 2**k for k in range(settings.levels) for s in (-1, 1)])

    # forward flow of u and u +- eps W for each time
    starts, ts = [], []
    for t in times:
        for W in (W1, W2):
            starts += [P + eps * W, P - eps * W]
            ts += [np.full(n, t)] * 2
        starts.append(P)
        ts.append(np.full(n, t))
    ts_all = np.concatenate(ts)
    out = np.asarray(flow(jnp.asarray(np.concatenate(starts)), jnp.asarray(ts_all)))
    out = out.reshape(len(times), 5, n, d)
    base = out[:, 4]
    push1 = (out[:, 0] - out[:, 1]) / (2 * eps)
    push2 = (out[:, 2] - out[:, 3]) / (2 * eps)

    # pulled-back metric
    G = np.asarray(gmat(jnp.asarray(base.reshape(-1, d)))).reshape(len(times), n, d, d)
    pulled_g = np.einsum("tna,tnab,tnb->tn", push1, G, push2)

    # pulled-back mirror: dphi_{-t} at phi_t(u) applied to B(dphi_t W1)
    Bm = np.asarray(bmat(jnp.asarray(base.reshape(-1, d)))).reshape(len(times), n, d, d)
    Y = np.einsum("tnab,tnb->tna", Bm, push1)
    back_starts = np.concatenate([base + eps * Y, base - eps * Y]).reshape(-1, d)
    back_t = np.concatenate([np.repeat(-times, n)] * 2)
    # pad to the forward batch shape so the jitted flow compiles once
    k = len(back_starts)
    pad = len(ts_all) - k
    back_starts = np.concatenate([back_starts, np.repeat(P[:1], pad, axis=0)])
    back_t = np.concatenate([back_t, np.zeros(pad)])
    back = np.asarray(flow(jnp.asarray(back_starts), jnp.asarray(back_t)))[:k].reshape(2, len(times), n, d)
    pulled_B = (back[0] - back[1]) / (2 * eps)

    lie_g = _richardson(pulled_g, h, settings.levels)
    lie_B = _richardson(pulled_B, h, settings.levels)
    return lie_g, lie_B
