"""Numerical predicates for vector fields on M and TM.

TM predicates work in the adapted orthonormal frame ``e_1..e_2m`` at each
sample.  One forward-mode Jacobian of the split components of ``Z`` gives the
matrix ``N[:, a] = nabla*_{e_a} Z``; every Lie derivative below is then a
small matrix expression in ``N`` and the curvature of the base:

    L_Z g     = N + N^T + C + C^T
    L_Z B     = B N - N B
    L_Z Bt    = Bt N - N Bt + H - C Bt
    L_Z omega = (J N) - (J N)^T - <J Z, Rc(., .)>
    L_Z theta = Bt Z + N^T S

where ``C = <Rc(Z, e_b), e_a>`` and ``H`` is the horizontal ``R(Z, .) v`` block.
The pointwise functions in ``bundle`` evaluate the same quantities vector by
vector and the test suite checks the two routes against each other.

Defect norms are sups over a probe set: the 2m frame vectors plus 8 seeded
random unit vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import jax
import jax.numpy as jnp
import numpy as np

from .base import (
    BaseVectorField,
    ChartedManifold,
    christoffel_symbols,
    flat_derivative,
    gamma_contract,
    killing_matrix,
    metric_tensor,
    nabla2_field,
    nabla_field,
    orthonormal_frame,
    ricci_tensor,
    riemann_tensor,
)
from .bundle import (
    SplitVector,
    TangentBundlePoint,
    TMVectorField,
    TTCovector,
    TTVector,
    assemble,
    canonical_fields,
    codifferential_tm as _codifferential_tm,
    complete_lift,
    horizontal_lift,
    lie_J,
    nabla_star_split,
    point,
    point_from_vector,
    point_vector,
    split,
)
from .models import OneFormField

DEFAULT_TOL = 1e-7
N_RANDOM_PROBES = 8


class DegenerateFit(ValueError):
    """The mirror fit has nothing to fit against."""


@dataclass(frozen=True)
class DefectReport:
    """Outcome of one predicate over a sample set; ``passed`` iff ``max_defect <= tol``."""

    name: str
    max_defect: float
    worst_index: int
    worst_point: tuple
    passed: bool
    tol: float
    value: Optional[float] = None

    def as_dict(self) -> dict:
        out = {"name": self.name, "max_defect": self.max_defect, "tol": self.tol, "pass": self.passed}
        if self.value is not None:
            out["value"] = self.value
        return out


def report(name: str, defects, points, tol: float, value: Optional[float] = None) -> DefectReport:
    d = np.asarray(defects, float).ravel()
    if d.size == 0:
        raise ValueError("need at least one sample")
    # NaN counts as a failure
    k = int(np.nanargmax(d)) if np.any(np.isfinite(d)) else 0
    worst = float(d[k]) if np.all(np.isfinite(d)) else float("nan")
    pt = tuple(np.asarray(c[k]).tolist() for c in points) if points is not None else ()
    return DefectReport(name, worst, k, pt, bool(worst <= tol), tol, value)


# ---------------------------------------------------------------------------
# frame operators on TM


class FrameOps(NamedTuple):
    """Per-point operators in the adapted orthonormal frame (see module docstring)."""

    N: jax.Array  # (2m, 2m) nabla*_{e_a} Z in column a
    Q: jax.Array  # (m, m)   frame coords of R(Z^h, E_b) v
    Rv: jax.Array  # (m, m, m) frame coords k of R(E_i, E_j) v
    z: jax.Array  # (2m,)   frame coords of Z
    s: jax.Array  # (m,)    frame coords of v


def frame_operators(M: ChartedManifold, Z: Callable, u: TangentBundlePoint) -> FrameOps:
    m = M.dim
    g = metric_tensor(M, u.x)
    E = orthonormal_frame(M, u.x)
    G = christoffel_symbols(M, u.x)
    R = riemann_tensor(M, u.x)
    K = jnp.einsum("bij,j->bi", G, u.v)

    def split_comps(p):
        q = point_from_vector(p, m)
        s = split(M, q, Z(q))
        return jnp.concatenate([s.h, s.v])

    J = jax.jacfwd(split_comps)(point_vector(u))
    sZ = split_comps(point_vector(u))
    hZ, vZ = sZ[:m], sZ[m:]
    zeros = jnp.zeros((m, m))
    chart_frame = jnp.block([[E, zeros], [-K @ E, E]])
    Dsplit = J @ chart_frame
    A = chart_frame[:m]  # base direction of each frame vector
    corr = jnp.concatenate([jnp.einsum("kij,ia,j->ka", G, A, hZ), jnp.einsum("kij,ia,j->ka", G, A, vZ)])
    P = E.T @ g
    N = jnp.block([[P, zeros], [zeros, P]]) @ (Dsplit + corr)
    Q = P @ jnp.einsum("lkij,k,i,jb->lb", R, u.v, hZ, E)
    Rv = jnp.einsum("al,lkij,k,ib,jc->abc", P, R, u.v, E, E)
    return FrameOps(N, Q, Rv, jnp.concatenate([P @ hZ, P @ vZ]), P @ u.v)


def mirror_matrices(m: int):
    """``(B, Bt, J)`` in the adapted frame."""
    Bm = np.zeros((2 * m, 2 * m))
    Bm[m:, :m] = np.eye(m)
    return Bm, Bm.T, Bm - Bm.T


def _blocks(ops: FrameOps):
    m = ops.Q.shape[-1]
    zeros = jnp.zeros_like(ops.Q)
    C = jnp.block([[zeros, zeros], [ops.Q, zeros]])
    H = jnp.block([[ops.Q, zeros], [zeros, zeros]])
    return m, C, H


def lie_metric_frame(ops: FrameOps) -> jax.Array:
    _, C, _ = _blocks(ops)
    return ops.N + ops.N.T + C + C.T


def lie_B_frame(ops: FrameOps) -> jax.Array:
    Bm, _, _ = mirror_matrices(ops.Q.shape[-1])
    return Bm @ ops.N - ops.N @ Bm


def lie_Bt_frame(ops: FrameOps) -> jax.Array:
    m, C, H = _blocks(ops)
    _, Bt, _ = mirror_matrices(m)
    return Bt @ ops.N - ops.N @ Bt + H - C @ Bt


def lie_omega_frame(ops: FrameOps) -> jax.Array:
    m = ops.Q.shape[-1]
    _, _, Jm = mirror_matrices(m)
    JN = Jm @ ops.N
    curv = -jnp.einsum("k,kij->ij", ops.z[:m], ops.Rv)
    zeros = jnp.zeros((m, m))
    return JN - JN.T + jnp.block([[curv, zeros], [zeros, zeros]])


def lie_theta_frame(ops: FrameOps) -> jax.Array:
    m = ops.Q.shape[-1]
    _, Bt, _ = mirror_matrices(m)
    S = jnp.concatenate([ops.s, jnp.zeros(m)])
    return Bt @ ops.z + ops.N.T @ S


def divergence_frame(ops: FrameOps) -> jax.Array:
    """``div Z``; the A- and Rc-terms of the Levi-Civita connection are traceless."""
    return jnp.trace(ops.N)


# ---------------------------------------------------------------------------
# probes and batching


def probe_matrix(dim: int, seed: int = 0, n_random: int = N_RANDOM_PROBES) -> np.ndarray:
    """Columns: the ``dim`` frame vectors then ``n_random`` seeded random unit vectors."""
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(dim, n_random))
    R /= np.linalg.norm(R, axis=0)
    return np.hstack([np.eye(dim), R])


def batch_frame_operators(M: ChartedManifold, Z: Callable, xs, vs) -> FrameOps:
    xs = jnp.asarray(np.atleast_2d(xs), dtype=float)
    vs = jnp.asarray(np.atleast_2d(vs), dtype=float)
    ops = jax.vmap(lambda x, v: frame_operators(M, Z, TangentBundlePoint(x, v)))(xs, vs)
    return FrameOps(*(np.asarray(a) for a in ops))


def _bilinear_sup(L: np.ndarray, P: np.ndarray) -> np.ndarray:
    return np.max(np.abs(np.einsum("ap,nab,bq->npq", P, L, P)), axis=(1, 2))


def _linear_sup(L: np.ndarray, P: np.ndarray) -> np.ndarray:
    return np.max(np.abs(np.einsum("ap,na->np", P, L)), axis=1)


def _operator_sup(L: np.ndarray, P: np.ndarray) -> np.ndarray:
    return np.max(np.linalg.norm(np.einsum("nab,bp->nap", L, P), axis=1), axis=1)


def _vmap_np(fn, *arrays):
    return np.asarray(jax.vmap(fn)(*(jnp.asarray(a, dtype=float) for a in arrays)))


# ---------------------------------------------------------------------------
# TM predicates


def _ops_at(M, Z, u):
    ops = frame_operators(M, Z, u)
    return FrameOps(*(np.asarray(a)[None] for a in ops))


def killing_defect_tm(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, seed: int = 0) -> float:
    """``sup |(L_Z g)(p, q)|`` over probe pairs."""
    ops = _ops_at(M, Z, u)
    return float(_bilinear_sup(np.asarray(jax.vmap(lie_metric_frame)(ops)), probe_matrix(2 * M.dim, seed))[0])


def symplectic_defect(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, seed: int = 0) -> float:
    """``sup |(L_Z omega)(p, q)|`` over probe pairs."""
    ops = _ops_at(M, Z, u)
    return float(_bilinear_sup(np.asarray(jax.vmap(lie_omega_frame)(ops)), probe_matrix(2 * M.dim, seed))[0])


def strictly_contact_defect(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, seed: int = 0) -> float:
    """``sup |(L_Z theta)(p)|`` over probes."""
    ops = _ops_at(M, Z, u)
    return float(_linear_sup(np.asarray(jax.vmap(lie_theta_frame)(ops)), probe_matrix(2 * M.dim, seed))[0])


def adjoint_mirror_defect(
    M: ChartedManifold, Z: Callable, u: TangentBundlePoint, lam: float = 0.0, seed: int = 0
) -> float:
    """``sup |(L_Z Bt - lam Bt)(p)|`` over probes."""
    ops = _ops_at(M, Z, u)
    _, Bt, _ = mirror_matrices(M.dim)
    L = np.asarray(jax.vmap(lie_Bt_frame)(ops)) - lam * Bt
    return float(_operator_sup(L, probe_matrix(2 * M.dim, seed))[0])


def _fit(L: np.ndarray, T: np.ndarray) -> tuple[float, float, np.ndarray]:
    den = L.shape[0] * float(np.sum(T * T))
    if den == 0.0:
        raise DegenerateFit("reference endomorphism vanishes")
    lam = float(np.sum(L * T) / den)
    res = np.linalg.norm(L - lam * T, axis=(1, 2))
    return lam, float(np.max(res)), res


def mirror_fit(M: ChartedManifold, Z: Callable, xs, vs) -> tuple[float, float]:
    """Least-squares ``lam`` with ``L_Z B ~ lam B`` and the max Frobenius residual."""
    ops = batch_frame_operators(M, Z, xs, vs)
    Bm, _, _ = mirror_matrices(M.dim)
    lam, res, _ = _fit(np.asarray(jax.vmap(lie_B_frame)(ops)), Bm)
    return lam, res


def adjoint_mirror_fit(M: ChartedManifold, Z: Callable, xs, vs) -> tuple[float, float]:
    ops = batch_frame_operators(M, Z, xs, vs)
    _, Bt, _ = mirror_matrices(M.dim)
    lam, res, _ = _fit(np.asarray(jax.vmap(lie_Bt_frame)(ops)), Bt)
    return lam, res


def tm_defects(M: ChartedManifold, Z: Callable, xs, vs, seed: int = 0) -> dict[str, np.ndarray]:
    """Per-sample defect arrays for every TM predicate, plus the mirror fits."""
    ops = batch_frame_operators(M, Z, xs, vs)
    P = probe_matrix(2 * M.dim, seed)
    Bm, Bt, _ = mirror_matrices(M.dim)
    LB = np.asarray(jax.vmap(lie_B_frame)(ops))
    LBt = np.asarray(jax.vmap(lie_Bt_frame)(ops))
    lam, _, resB = _fit(LB, Bm)
    lam_t, _, resBt = _fit(LBt, Bt)
    return {
        "killing": _bilinear_sup(np.asarray(jax.vmap(lie_metric_frame)(ops)), P),
        "symplectic": _bilinear_sup(np.asarray(jax.vmap(lie_omega_frame)(ops)), P),
        "strictly_contact": _linear_sup(np.asarray(jax.vmap(lie_theta_frame)(ops)), P),
        "incompressible": np.abs(np.asarray(jax.vmap(divergence_frame)(ops))),
        "mirror": resB,
        "mirror_lambda": np.array(lam),
        "zero_mirror": _operator_sup(LB, P),
        "adjoint_mirror": resBt,
        "adjoint_mirror_lambda": np.array(lam_t),
        "zero_adjoint_mirror": _operator_sup(LBt, P),
    }


# ---------------------------------------------------------------------------
# base-field predicates


def _frame_tensor(M, x, T, contravariant_first=True):
    """Components of a (1, k) tensor in the orthonormal frame at ``x``."""
    g = metric_tensor(M, x)
    E = orthonormal_frame(M, x)
    out = jnp.einsum("al,l...->a...", E.T @ g, T)
    for axis in range(1, T.ndim):
        out = jnp.moveaxis(jnp.tensordot(out, E, axes=([axis], [0])), -1, axis)
    return out


def affine_tensor(M: ChartedManifold, X: BaseVectorField, x) -> jax.Array:
    """``A[l, j, k] = (nabla^2 X(d_j, d_k) + R(X, d_j) d_k)^l``."""
    H = nabla2_field(M, X, x)
    R = riemann_tensor(M, x)
    return H + jnp.einsum("lkij,i->ljk", R, X(x))


def affine_defect(M: ChartedManifold, X: BaseVectorField, x, Y, Z) -> np.ndarray:
    """``nabla^2 X(Y, Z) + R(X, Y) Z``."""
    x = jnp.asarray(x, dtype=float)
    return np.asarray(jnp.einsum("ljk,j,k->l", affine_tensor(M, X, x), jnp.asarray(Y, float), jnp.asarray(Z, float)))


def almost_analytic_defect(M: ChartedManifold, X: BaseVectorField, u: TangentBundlePoint, Y) -> TTVector:
    """``(L_X~ J)(pi^* Y)`` from the Lie-derivative formulas on TM."""
    Xt = TMVectorField(lambda p: complete_lift(M, X, p), "ext")
    Yfield = BaseVectorField(lambda y: jnp.asarray(Y, dtype=float) + 0.0 * y, "Y")
    return lie_J(M, Xt, u, horizontal_lift(M, Yfield, u))


def almost_analytic_closed_form(M: ChartedManifold, X: BaseVectorField, u: TangentBundlePoint, Y) -> TTVector:
    """``-pi^*(R(X, Y) v + nabla^2 X(Y, v))``."""
    val = -jnp.einsum("ljk,j,k->l", affine_tensor(M, X, u.x), jnp.asarray(Y, float), u.v)
    return assemble(M, u, SplitVector(val, jnp.zeros_like(val)))


def totally_geodesic_tensor(M: ChartedManifold, X: BaseVectorField, x) -> jax.Array:
    """``T[l, a, b]`` for the totally-geodesic equation with ``Z1 = d_a``, ``Z2 = d_b``.

    ``nabla_{nabla_{Z1} Z2 + R(X, nabla_{Z2} X) Z1 / 2 + R(X, nabla_{Z1} X) Z2 / 2} X
    - nabla_{Z1} nabla_{Z2} X + R(Z1, Z2) X / 2`` with the second-order terms
    combined into ``-nabla^2 X(Z1, Z2)``.
    """
    N = nabla_field(M, X, x)
    H = nabla2_field(M, X, x)
    R = riemann_tensor(M, x)
    Xx = X(x)
    # W1[l, a, b] = R(X, nabla_b X) d_a,  W2[l, a, b] = R(X, nabla_a X) d_b
    W1 = jnp.einsum("lkij,i,jb,ka->lab", R, Xx, N, jnp.eye(M.dim))
    W2 = jnp.einsum("lkij,i,ja,kb->lab", R, Xx, N, jnp.eye(M.dim))
    RX = jnp.einsum("lkab,k->lab", R, Xx)
    return 0.5 * jnp.einsum("li,iab->lab", N, W1 + W2) - H + 0.5 * RX


def totally_geodesic_defect(M: ChartedManifold, X: BaseVectorField, x, Z1, Z2) -> np.ndarray:
    x = jnp.asarray(x, dtype=float)
    T = totally_geodesic_tensor(M, X, x)
    return np.asarray(jnp.einsum("lab,a,b->l", T, jnp.asarray(Z1, float), jnp.asarray(Z2, float)))


def harmonic_map_terms(M: ChartedManifold, X: BaseVectorField, x) -> tuple[jax.Array, jax.Array]:
    """``(tr_g R(nabla_. X, X) ., tr_g nabla^2 X)``."""
    gi = jnp.linalg.inv(metric_tensor(M, x))
    N = nabla_field(M, X, x)
    H = nabla2_field(M, X, x)
    R = riemann_tensor(M, x)
    curv = jnp.einsum("ij,ljab,ai,b->l", gi, R, N, X(x))
    lap = jnp.einsum("jk,ljk->l", gi, H)
    return curv, lap


def harmonic_map_defect(M: ChartedManifold, X: BaseVectorField, x) -> tuple[np.ndarray, np.ndarray]:
    c, lap = harmonic_map_terms(M, X, jnp.asarray(x, dtype=float))
    return np.asarray(c), np.asarray(lap)


def bending_integrand(M: ChartedManifold, X: BaseVectorField, x) -> float:
    """``|nabla X|_g^2``."""
    x = jnp.asarray(x, dtype=float)
    return float(_bending(M, X, x))


def _bending(M, X, x):
    g = metric_tensor(M, x)
    N = nabla_field(M, X, x)
    return jnp.einsum("ab,ij,ai,bj->", g, jnp.linalg.inv(g), N, N)


def energy_estimate(M: ChartedManifold, X: BaseVectorField, n: int = 8) -> float:
    """Energy of ``X`` as a map into TM over the sampling box.

    ``(m/2) vol + (1/2) int |nabla X|^2`` with the midpoint rule on an
    ``n^m`` lattice and ``sqrt(det g)`` weights.
    """
    lo, hi = M.box()
    h = (hi - lo) / n
    axes = [lo[i] + h[i] * (np.arange(n) + 0.5) for i in range(M.dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, M.dim)
    cell = float(np.prod(h))

    def local(x):
        w = jnp.sqrt(jnp.linalg.det(metric_tensor(M, x)))
        return w, w * _bending(M, X, x)

    w, b = jax.vmap(local)(jnp.asarray(grid))
    vol = float(jnp.sum(w)) * cell
    return 0.5 * M.dim * vol + 0.5 * float(jnp.sum(b)) * cell


def _base_kernels(M: ChartedManifold, X: BaseVectorField, x, keys: Sequence[str]):
    E = orthonormal_frame(M, x)
    g = metric_tensor(M, x)
    out = {}
    for key in keys:
        if key == "base_killing":
            out[key] = jnp.max(jnp.abs(E.T @ killing_matrix(M, X, x) @ E))
        elif key == "base_divergence":
            out[key] = jnp.abs(jnp.trace(nabla_field(M, X, x)))
        elif key == "base_harmonic":
            D = E.T @ flat_derivative(M, X, x) @ E
            out[key] = jnp.maximum(jnp.max(jnp.abs(D)), jnp.abs(jnp.trace(nabla_field(M, X, x))))
        elif key == "affine":
            out[key] = jnp.max(jnp.abs(_frame_tensor(M, x, affine_tensor(M, X, x))))
        elif key == "totally_geodesic":
            out[key] = jnp.max(jnp.abs(_frame_tensor(M, x, totally_geodesic_tensor(M, X, x))))
        elif key == "harmonic_map":
            curv, lap = harmonic_map_terms(M, X, x)
            out[key] = jnp.maximum(jnp.sqrt(curv @ g @ curv), jnp.sqrt(lap @ g @ lap))
        elif key == "bending":
            out[key] = _bending(M, X, x)
        else:
            raise KeyError(key)
    return out


BASE_KEYS = ("base_killing", "base_divergence", "base_harmonic", "affine", "totally_geodesic", "harmonic_map", "bending")


def base_defects(M: ChartedManifold, X: BaseVectorField, xs, keys: Sequence[str] = BASE_KEYS) -> dict[str, np.ndarray]:
    """Per-sample base defects (orthonormal-frame sup norms) for the requested keys."""
    out = jax.vmap(lambda x: _base_kernels(M, X, x, keys))(jnp.asarray(np.atleast_2d(xs), dtype=float))
    return {k: np.asarray(v) for k, v in out.items()}


def almost_analytic_defects(M: ChartedManifold, X: BaseVectorField, xs, vs) -> np.ndarray:
    """Per-sample ``sup_Y |(L_X~ J)(pi^* Y)|`` over frame and random unit ``Y``."""
    P = probe_matrix(M.dim, 1)

    def one(x, v):
        E = orthonormal_frame(M, x)
        A = _frame_tensor(M, x, affine_tensor(M, X, x))
        vf = E.T @ metric_tensor(M, x) @ v
        return jnp.max(jnp.linalg.norm(jnp.einsum("ljk,jp,k->lp", A, jnp.asarray(P), vf), axis=0))

    return _vmap_np(one, np.atleast_2d(xs), np.atleast_2d(vs))


# ---------------------------------------------------------------------------
# 1-forms


LIFT_KINDS = ("pullback", "vertical", "extension")


def lift_one_form(M: ChartedManifold, alpha: OneFormField, u: TangentBundlePoint, which: str) -> TTCovector:
    """Chart components of ``pi^* alpha``, ``pi^star alpha`` or ``alpha~`` at ``u``."""
    if which == "pullback":
        f = alpha(u.x)
        return TTCovector(f, jnp.zeros_like(f))
    if which == "vertical":
        f = alpha(u.x)
        G = christoffel_symbols(M, u.x)
        return TTCovector(jnp.einsum("b,bij,j->i", f, G, u.v), f)
    if which == "extension":
        f, df_v = jax.jvp(alpha.fn, (u.x,), (u.v,))
        return TTCovector(df_v, f)
    raise ValueError(f"unknown lift {which!r}; expected one of {LIFT_KINDS}")


def lifted_form_field(M: ChartedManifold, alpha: OneFormField, which: str) -> Callable:
    return lambda u: lift_one_form(M, alpha, u, which)


def extension_via_connection(M: ChartedManifold, alpha: OneFormField, u: TangentBundlePoint) -> TTCovector:
    """``alpha~ = nabla*_S pi^* alpha + pi^star alpha`` from split components.

    On split components ``(mu_h, mu_v)`` the pull-back connection acts as
    ``(nabla*_W mu)_h,k = W(mu_h,k) - Gamma^l_ik W_h^i mu_h,l`` and likewise on
    ``mu_v``; the result is converted back to chart components.
    """
    _, S = canonical_fields(M, u)
    G = christoffel_symbols(M, u.x)
    f, df_S = jax.jvp(alpha.fn, (u.x,), (S.a,))
    h = df_S - jnp.einsum("lik,i,l->k", G, S.a, f)
    vpart = f
    # chart components: mu(d_{x^k}) = mu_h,k + mu_v,b Gamma^b_kj v^j
    return TTCovector(h + jnp.einsum("b,bkj,j->k", vpart, G, u.v), vpart)


def base_codifferential(M: ChartedManifold, alpha: OneFormField, x) -> jax.Array:
    """``delta alpha = -div(alpha^sharp)`` on M."""
    sharp = BaseVectorField(lambda y: jnp.linalg.solve(metric_tensor(M, y), alpha(y)), "alpha#")
    return -jnp.trace(nabla_field(M, sharp, x))


def codifferential_tm(M: ChartedManifold, mu: Callable, u: TangentBundlePoint) -> jax.Array:
    """``delta mu = -sum_a g(nabla^g_{e_a} mu^sharp, e_a)`` over the adapted frame."""
    return _codifferential_tm(M, mu, u)


def ricci_obstruction(M: ChartedManifold, alpha: OneFormField, u: TangentBundlePoint) -> jax.Array:
    """``-Ric(v, alpha^sharp)``, the value of ``delta alpha~`` for harmonic ``alpha``."""
    sharp = jnp.linalg.solve(metric_tensor(M, u.x), alpha(u.x))
    return -u.v @ ricci_tensor(M, u.x) @ sharp


# ---------------------------------------------------------------------------
# aggregation


TM_PREDICATES = ("killing", "symplectic", "strictly_contact", "incompressible", "mirror", "adjoint_mirror")
BASE_PREDICATES = ("base_killing", "base_divergence", "base_harmonic", "affine", "almost_analytic", "totally_geodesic", "harmonic_map")


def classify(
    M: ChartedManifold,
    Z: Callable,
    xs,
    vs,
    tol: float = DEFAULT_TOL,
    base: Optional[BaseVectorField] = None,
    seed: int = 0,
) -> list[DefectReport]:
    """Run every TM predicate on ``Z`` (and base predicates when ``base`` is given).

    The mirror rows report the fitted ``lam`` in ``value`` and the fit residual
    as the defect.
    """
    xs = np.atleast_2d(np.asarray(xs, float))
    vs = np.atleast_2d(np.asarray(vs, float))
    if len(xs) < 1:
        raise ValueError("need at least one sample")
    pts = (xs, vs)
    d = tm_defects(M, Z, xs, vs, seed)
    out = [
        report("killing", d["killing"], pts, tol),
        report("symplectic", d["symplectic"], pts, tol),
        report("strictly_contact", d["strictly_contact"], pts, tol),
        report("incompressible", d["incompressible"], pts, tol),
        report("mirror", d["mirror"], pts, tol, float(d["mirror_lambda"])),
        report("adjoint_mirror", d["adjoint_mirror"], pts, tol, float(d["adjoint_mirror_lambda"])),
    ]
    if base is not None:
        b = base_defects(M, base, xs)
        for name in ("base_killing", "base_divergence", "base_harmonic", "affine"):
            out.append(report(name, b[name], (xs,), tol))
        out.append(report("almost_analytic", almost_analytic_defects(M, base, xs, vs), pts, tol))
        for name in ("totally_geodesic", "harmonic_map"):
            out.append(report(name, b[name], (xs,), tol))
    return out
