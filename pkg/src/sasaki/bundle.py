"""The tangent bundle TM with its Sasaki metric.

A tangent vector to TM at ``u = (x, v)`` is stored in chart form
``TTVector(a, b) = a^i d_i + b^i d_{v^i}``.  The Levi-Civita connection
splits it into horizontal and vertical parts,

    h = a,        v^b = b^b + Gamma^b_ij v^j a^i,

so that ``W = h^i pi^* d_i + v^i pi^star d_i`` where ``pi^* d_i`` is the
horizontal lift and ``pi^star d_i = d_{v^i}`` the vertical lift.  Most
formulas below are evaluated in split form and converted back on return.

The connection ``nabla*`` is the pull-back of the base connection acting on
each summand separately.  Its torsion is the curvature operator
``Rc(W1, W2) = pi^star(R(h1, h2) v)``, and the Levi-Civita connection of the
Sasaki metric is ``nabla*_W F + A(W, F) - Rc(W, F) / 2`` where ``A`` is the
symmetric horizontal correction making it metric.

Vector fields on TM are callables ``TangentBundlePoint -> TTVector`` written
in jax.numpy; directional derivatives use ``jax.jvp``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import jax
import jax.numpy as jnp
import numpy as np

from .base import (
    BaseVectorField,
    ChartedManifold,
    christoffel_symbols,
    gamma_contract,
    metric_tensor,
    nabla_field,
    orthonormal_frame,
    riemann_lowered,
    riemann_tensor,
    scalar_curvature,
)

Array = jax.Array


class TangentBundlePoint(NamedTuple):
    x: Array
    v: Array


class TTVector(NamedTuple):
    a: Array
    b: Array


class SplitVector(NamedTuple):
    h: Array
    v: Array


class TTCovector(NamedTuple):
    """Chart covector ``dx * dx^i + dv * dv^i`` on TM."""

    dx: Array
    dv: Array


MIRRORS = ("B", "Bt", "JNS", "golden")


@dataclass(frozen=True, eq=False)
class TMVectorField:
    """A vector field on TM given in chart form."""

    fn: Callable[[TangentBundlePoint], TTVector]
    name: str = "Z"

    def __call__(self, u: TangentBundlePoint) -> TTVector:
        return self.fn(u)


def point(x, v) -> TangentBundlePoint:
    return TangentBundlePoint(jnp.asarray(x, dtype=float), jnp.asarray(v, dtype=float))


def ttvector(a, b) -> TTVector:
    return TTVector(jnp.asarray(a, dtype=float), jnp.asarray(b, dtype=float))


def as_vector(W: TTVector) -> Array:
    return jnp.concatenate([W.a, W.b])


def from_vector(w, m: int) -> TTVector:
    w = jnp.asarray(w, dtype=float)
    return TTVector(w[:m], w[m:])


def point_vector(u: TangentBundlePoint) -> Array:
    return jnp.concatenate([u.x, u.v])


def point_from_vector(p, m: int) -> TangentBundlePoint:
    p = jnp.asarray(p, dtype=float)
    return TangentBundlePoint(p[:m], p[m:])


def _tangent(W: TTVector) -> TangentBundlePoint:
    return TangentBundlePoint(jnp.asarray(W.a, dtype=float), jnp.asarray(W.b, dtype=float))


def directional(F: Callable, u: TangentBundlePoint, W: TTVector):
    """``(F(u), dF_u(W))`` by forward-mode AD for any pytree-valued ``F``."""
    return jax.jvp(F, (u,), (_tangent(W),))


# ---------------------------------------------------------------------------
# splitting


def split(M: ChartedManifold, u: TangentBundlePoint, W: TTVector) -> SplitVector:
    G = christoffel_symbols(M, u.x)
    return SplitVector(W.a, W.b + gamma_contract(G, W.a, u.v))


def assemble(M: ChartedManifold, u: TangentBundlePoint, S: SplitVector) -> TTVector:
    G = christoffel_symbols(M, u.x)
    return TTVector(S.h, S.v - gamma_contract(G, S.h, u.v))


def horizontal_lift(M: ChartedManifold, X: BaseVectorField, u: TangentBundlePoint) -> TTVector:
    Xx = X(u.x)
    return assemble(M, u, SplitVector(Xx, jnp.zeros_like(Xx)))


def vertical_lift(M: ChartedManifold, X: BaseVectorField, u: TangentBundlePoint) -> TTVector:
    Xx = X(u.x)
    return TTVector(jnp.zeros_like(Xx), Xx)


def complete_lift(M: ChartedManifold, X: BaseVectorField, u: TangentBundlePoint) -> TTVector:
    """``X~ = X^i d_i + v^j d_j X^i d_{v^i}`` (chart form)."""
    Xx, dXv = jax.jvp(X.fn, (u.x,), (u.v,))
    return TTVector(Xx, dXv)


def canonical_fields(M: ChartedManifold, u: TangentBundlePoint) -> tuple[TTVector, TTVector]:
    """``(xi, S)``: ``xi_u = u`` vertically and the geodesic spray ``S = Bt xi``."""
    zero = jnp.zeros_like(u.v)
    xi = TTVector(zero, u.v)
    return xi, mirror_apply(M, u, xi, "Bt")


def lifted_field(M: ChartedManifold, X: BaseVectorField, kind: str) -> TMVectorField:
    """Wrap a base field as the TM field ``h`` (horizontal), ``v`` or ``ext``."""
    makers = {"h": horizontal_lift, "v": vertical_lift, "ext": complete_lift}
    if kind not in makers:
        raise ValueError(f"unknown lift {kind!r}")
    make = makers[kind]
    return TMVectorField(lambda u: make(M, X, u), f"{kind}:{X.name}")


def xi_field(M: ChartedManifold) -> TMVectorField:
    return TMVectorField(lambda u: canonical_fields(M, u)[0], "xi")


def spray_field(M: ChartedManifold) -> TMVectorField:
    return TMVectorField(lambda u: canonical_fields(M, u)[1], "spray")


def tanno_field(M: ChartedManifold, P) -> TMVectorField:
    """The vertical field ``pi^star(P xi)`` for a constant (1,1)-tensor ``P``."""
    P = jnp.asarray(P, dtype=float)
    return TMVectorField(lambda u: TTVector(jnp.zeros_like(u.v), P @ u.v), "skew")


def split_field(M: ChartedManifold, hfun: Callable, vfun: Callable, name: str) -> TMVectorField:
    """A TM field given by its split components as functions of ``u``."""
    return TMVectorField(lambda u: assemble(M, u, SplitVector(hfun(u), vfun(u))), name)


def add_fields(*fields: TMVectorField, coeffs=None) -> TMVectorField:
    coeffs = [1.0] * len(fields) if coeffs is None else list(coeffs)

    def fn(u):
        parts = [F(u) for F in fields]
        a = sum(c * p.a for c, p in zip(coeffs, parts))
        b = sum(c * p.b for c, p in zip(coeffs, parts))
        return TTVector(a, b)

    return TMVectorField(fn, "+".join(F.name for F in fields))


# ---------------------------------------------------------------------------
# pointwise tensors


def mirror_split(S: SplitVector, which: str) -> SplitVector:
    h, v = S
    if which == "B":
        return SplitVector(jnp.zeros_like(h), h)
    if which == "Bt":
        return SplitVector(v, jnp.zeros_like(v))
    if which == "JNS":
        return SplitVector(-v, h)
    if which == "golden":
        r = 0.5 * jnp.sqrt(5.0)
        return SplitVector(0.5 * h + r * v, 0.5 * v + r * h)
    raise ValueError(f"unknown endomorphism {which!r}; expected one of {MIRRORS}")


def mirror_apply(M: ChartedManifold, u: TangentBundlePoint, W: TTVector, which: str) -> TTVector:
    return assemble(M, u, mirror_split(split(M, u, W), which))


def inner_split(g: Array, S1: SplitVector, S2: SplitVector) -> Array:
    return S1.h @ g @ S2.h + S1.v @ g @ S2.v


def sasaki_inner(M: ChartedManifold, u: TangentBundlePoint, W1: TTVector, W2: TTVector) -> Array:
    return inner_split(metric_tensor(M, u.x), split(M, u, W1), split(M, u, W2))


def sasaki_matrix(M: ChartedManifold, u: TangentBundlePoint) -> Array:
    """The Sasaki metric as a ``2m x 2m`` matrix in the chart ``(x, v)``."""
    g = metric_tensor(M, u.x)
    K = jnp.einsum("bij,j->bi", christoffel_symbols(M, u.x), u.v)
    gK = g @ K
    return jnp.block([[g + K.T @ gK, gK.T], [gK, g]])


def curvature_split(M: ChartedManifold, u: TangentBundlePoint, S1: SplitVector, S2: SplitVector) -> SplitVector:
    R = riemann_tensor(M, u.x)
    val = jnp.einsum("lpij,p,i,j->l", R, u.v, S1.h, S2.h)
    return SplitVector(jnp.zeros_like(val), val)


def curvature_op_R(M: ChartedManifold, u: TangentBundlePoint, W1: TTVector, W2: TTVector) -> TTVector:
    """``Rc(W1, W2) = pi^star(R(W1^h, W2^h) v)``; always vertical."""
    return assemble(M, u, curvature_split(M, u, split(M, u, W1), split(M, u, W2)))


def a_term_split(M: ChartedManifold, u: TangentBundlePoint, S1: SplitVector, S2: SplitVector) -> SplitVector:
    """Horizontal ``A(X, Y)`` with ``g(A(X,Y), Z) = (g(Rc(X,Z), Y) + g(Rc(Y,Z), X)) / 2``."""
    g = metric_tensor(M, u.x)
    Rl = riemann_lowered(M, u.x)
    cov = 0.5 * (
        jnp.einsum("qpik,q,p,i->k", Rl, S2.v, u.v, S1.h)
        + jnp.einsum("qpik,q,p,i->k", Rl, S1.v, u.v, S2.h)
    )
    h = jnp.linalg.solve(g, cov)
    return SplitVector(h, jnp.zeros_like(h))


# ---------------------------------------------------------------------------
# connections


def nabla_star_split(M: ChartedManifold, F: Callable, u: TangentBundlePoint, W: TTVector) -> SplitVector:
    """``nabla*_W F`` in split form."""
    s, ds = directional(lambda p: split(M, p, F(p)), u, W)
    G = christoffel_symbols(M, u.x)
    return SplitVector(ds.h + gamma_contract(G, W.a, s.h), ds.v + gamma_contract(G, W.a, s.v))


def nabla_star(M: ChartedManifold, F: Callable, u: TangentBundlePoint, W: TTVector) -> TTVector:
    return assemble(M, u, nabla_star_split(M, F, u, W))


def sasaki_connection_split(M: ChartedManifold, F: Callable, u: TangentBundlePoint, W: TTVector) -> SplitVector:
    D = nabla_star_split(M, F, u, W)
    sW, sF = split(M, u, W), split(M, u, F(u))
    A = a_term_split(M, u, sW, sF)
    Rc = curvature_split(M, u, sW, sF)
    return SplitVector(D.h + A.h, D.v - 0.5 * Rc.v)


def sasaki_connection(M: ChartedManifold, F: Callable, u: TangentBundlePoint, W: TTVector) -> TTVector:
    """Levi-Civita connection of the Sasaki metric, ``nabla^g_W F``."""
    return assemble(M, u, sasaki_connection_split(M, F, u, W))


def covariant_field(M: ChartedManifold, F: Callable, along: Callable) -> TMVectorField:
    """The TM field ``u -> nabla*_{along(u)} F``."""
    return TMVectorField(lambda u: nabla_star(M, F, u, along(u)), "nabla*")


# ---------------------------------------------------------------------------
# forms and scalar curvature


def theta_omega(M: ChartedManifold, u: TangentBundlePoint, W1: TTVector, W2: TTVector) -> tuple[Array, Array]:
    """``theta(W1) = g(S, W1)`` and ``omega(W1, W2) = -g(J W1, W2)``."""
    g = metric_tensor(M, u.x)
    s1, s2 = split(M, u, W1), split(M, u, W2)
    theta = u.v @ g @ s1.h
    omega = -inner_split(g, mirror_split(s1, "JNS"), s2)
    return theta, omega


def omega_via_mirror(M: ChartedManifold, u: TangentBundlePoint, W1: TTVector, W2: TTVector) -> Array:
    """``g(B W2, W1) - g(B W1, W2)``."""
    g = metric_tensor(M, u.x)
    s1, s2 = split(M, u, W1), split(M, u, W2)
    return inner_split(g, mirror_split(s2, "B"), s1) - inner_split(g, mirror_split(s1, "B"), s2)


def curvature_norm_sq(M: ChartedManifold, u: TangentBundlePoint) -> Array:
    """``|Rc|^2 = v^p v^p' R_kpij R_k'p'i'j' g^ii' g^jj' g^kk'``."""
    gi = jnp.linalg.inv(metric_tensor(M, u.x))
    T = jnp.einsum("kpij,p->kij", riemann_lowered(M, u.x), u.v)
    return jnp.einsum("kij,lab,ia,jb,kl->", T, T, gi, gi, gi)


def sasaki_scalar(M: ChartedManifold, u: TangentBundlePoint) -> Array:
    return scalar_curvature(M, u.x) - 0.25 * curvature_norm_sq(M, u)


# ---------------------------------------------------------------------------
# Lie derivatives and brackets


def bracket_tm(M: ChartedManifold, Z1: Callable, Z2: Callable, u: TangentBundlePoint) -> TTVector:
    """Coordinate Lie bracket ``[Z1, Z2]`` on the ``2m``-dimensional chart."""
    _, d2 = directional(Z2, u, Z1(u))
    _, d1 = directional(Z1, u, Z2(u))
    return TTVector(d2.a - d1.a, d2.b - d1.b)


def lie_metric(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, W1: TTVector, W2: TTVector) -> Array:
    """``(L_Z g)(W1, W2)`` from the nabla* expansion plus the two curvature terms."""
    g = metric_tensor(M, u.x)
    s1, s2, sZ = split(M, u, W1), split(M, u, W2), split(M, u, Z(u))
    D1 = nabla_star_split(M, Z, u, W1)
    D2 = nabla_star_split(M, Z, u, W2)
    R2 = curvature_split(M, u, sZ, s2)
    R1 = curvature_split(M, u, sZ, s1)
    return inner_split(g, D1, s2) + inner_split(g, s1, D2) + inner_split(g, R2, s1) + inner_split(g, R1, s2)


def lie_B_split(M, Z, u, W) -> SplitVector:
    """``(L_Z B)(W) = -nabla*_{BW} Z + B nabla*_W Z``."""
    BW = mirror_apply(M, u, W, "B")
    D1 = nabla_star_split(M, Z, u, BW)
    D2 = mirror_split(nabla_star_split(M, Z, u, W), "B")
    return SplitVector(D2.h - D1.h, D2.v - D1.v)


def lie_Bt_split(M, Z, u, W) -> SplitVector:
    """``(L_Z Bt)(W) = -nabla*_{Bt W} Z + Bt nabla*_W Z + pi^* R(Z, W) S - Rc(Z, Bt W)``."""
    g_s = split(M, u, W)
    sZ = split(M, u, Z(u))
    BtW = mirror_apply(M, u, W, "Bt")
    D1 = nabla_star_split(M, Z, u, BtW)
    D2 = mirror_split(nabla_star_split(M, Z, u, W), "Bt")
    R = riemann_tensor(M, u.x)
    hor = jnp.einsum("lpij,p,i,j->l", R, u.v, sZ.h, g_s.h)
    Rc = curvature_split(M, u, sZ, mirror_split(g_s, "Bt"))
    return SplitVector(D2.h - D1.h + hor, D2.v - D1.v - Rc.v)


def lie_B(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, W: TTVector) -> TTVector:
    return assemble(M, u, lie_B_split(M, Z, u, W))


def lie_Bt(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, W: TTVector) -> TTVector:
    return assemble(M, u, lie_Bt_split(M, Z, u, W))


def lie_J(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, W: TTVector) -> TTVector:
    """``L_Z J`` for ``J = B - Bt``."""
    a, b = lie_B_split(M, Z, u, W), lie_Bt_split(M, Z, u, W)
    return assemble(M, u, SplitVector(a.h - b.h, a.v - b.v))


def lie_omega(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, W1: TTVector, W2: TTVector) -> Array:
    """``(L_Z omega)(Y, W) = -g(nabla*_Y JZ, W) + g(nabla*_W JZ, Y) - g(JZ, Rc(Y, W))``."""
    g = metric_tensor(M, u.x)
    s1, s2 = split(M, u, W1), split(M, u, W2)
    DY = mirror_split(nabla_star_split(M, Z, u, W1), "JNS")
    DW = mirror_split(nabla_star_split(M, Z, u, W2), "JNS")
    JZ = mirror_split(split(M, u, Z(u)), "JNS")
    return -inner_split(g, DY, s2) + inner_split(g, DW, s1) - inner_split(g, JZ, curvature_split(M, u, s1, s2))


def lie_theta(M: ChartedManifold, Z: Callable, u: TangentBundlePoint, W: TTVector) -> Array:
    """``(L_Z theta)(W) = g(Bt Z, W) + g(S, nabla*_W Z)``."""
    g = metric_tensor(M, u.x)
    sW = split(M, u, W)
    BtZ = mirror_split(split(M, u, Z(u)), "Bt")
    D = nabla_star_split(M, Z, u, W)
    return inner_split(g, BtZ, sW) + u.v @ g @ D.h


# ---------------------------------------------------------------------------
# adapted frames, divergence and 1-forms


def adapted_frame(M: ChartedManifold, u: TangentBundlePoint) -> list[TTVector]:
    """``e_1..e_m`` horizontal lifts of the base Gram-Schmidt frame, ``e_{i+m} = B e_i``."""
    E = orthonormal_frame(M, u.x)
    zero = jnp.zeros(M.dim)
    hor = [assemble(M, u, SplitVector(E[:, i], zero)) for i in range(M.dim)]
    ver = [TTVector(zero, E[:, i]) for i in range(M.dim)]
    return hor + ver


def frame_coordinates(M: ChartedManifold, u: TangentBundlePoint, S: SplitVector) -> Array:
    """Coordinates of a split vector in the adapted orthonormal frame."""
    g = metric_tensor(M, u.x)
    E = orthonormal_frame(M, u.x)
    return jnp.concatenate([E.T @ g @ S.h, E.T @ g @ S.v])


def divergence_tm(M: ChartedManifold, Z: Callable, u: TangentBundlePoint) -> Array:
    """``div Z = sum_a g(nabla^g_{e_a} Z, e_a)`` over the adapted frame."""
    g = metric_tensor(M, u.x)
    frame = adapted_frame(M, u)
    W = TTVector(jnp.stack([e.a for e in frame]), jnp.stack([e.b for e in frame]))

    def term(e):
        return inner_split(g, sasaki_connection_split(M, Z, u, e), split(M, u, e))

    return jnp.sum(jax.vmap(term)(W))


def covector_split(M: ChartedManifold, u: TangentBundlePoint, mu: TTCovector) -> SplitVector:
    """Values of ``mu`` on ``pi^* d_k`` and ``pi^star d_k``."""
    G = christoffel_symbols(M, u.x)
    return SplitVector(mu.dx - jnp.einsum("bkj,j,b->k", G, u.v, mu.dv), mu.dv)


def sharp(M: ChartedManifold, u: TangentBundlePoint, mu: TTCovector) -> TTVector:
    g = metric_tensor(M, u.x)
    c = covector_split(M, u, mu)
    return assemble(M, u, SplitVector(jnp.linalg.solve(g, c.h), jnp.linalg.solve(g, c.v)))


def flat(M: ChartedManifold, u: TangentBundlePoint, W: TTVector) -> TTCovector:
    w = sasaki_matrix(M, u) @ as_vector(W)
    return TTCovector(w[: M.dim], w[M.dim :])


def codifferential_tm(M: ChartedManifold, mu: Callable, u: TangentBundlePoint) -> Array:
    """``delta mu = -sum_a g(nabla^g_{e_a} mu^sharp, e_a)``."""
    return -divergence_tm(M, lambda p: sharp(M, p, mu(p)), u)


def exterior_derivative_tm(M: ChartedManifold, mu: Callable, u: TangentBundlePoint) -> Array:
    """Chart components ``D[A, B] = d_A mu_B - d_B mu_A`` of ``d mu``."""
    m = M.dim

    def comps(p):
        c = mu(point_from_vector(p, m))
        return jnp.concatenate([c.dx, c.dv])

    J = jax.jacfwd(comps)(point_vector(u))
    return J.T - J


def flat_field(M: ChartedManifold, Z: Callable) -> Callable:
    return lambda u: flat(M, u, Z(u))


def sasaki_chart_manifold(M: ChartedManifold) -> ChartedManifold:
    """TM itself as a ``2m``-dimensional charted manifold carrying the Sasaki metric.

    Used as an independent route: its Christoffel symbols, curvature and
    Killing operator come from the generic base machinery.
    """
    m = M.dim

    def metric(p):
        return sasaki_matrix(M, point_from_vector(p, m))

    lo, hi = M.box()
    return ChartedManifold(
        dim=2 * m,
        name=f"T{M.name}",
        metric=metric,
        lower=tuple(lo) + (-10.0,) * m,
        upper=tuple(hi) + (10.0,) * m,
        margin=(0.0,) * (2 * m),
    )


def as_numpy(W) -> np.ndarray:
    if isinstance(W, (TTVector, SplitVector, TTCovector)):
        return np.concatenate([np.asarray(W[0]), np.asarray(W[1])])
    return np.asarray(W)
