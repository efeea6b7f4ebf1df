"""Verification suites run by ``sasaki verify`` and the acceptance tests.

Each suite evaluates one family of identities on a model at seeded samples
and reduces it to a single ``max_defect`` compared against a tolerance.  The
registry order is the output order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import jax
import jax.numpy as jnp
import numpy as np

from . import base as bg
from . import bundle as tb
from . import classifiers as cl
from . import geodesics as gd
from .flows import FlowSettings, flow_lie_derivatives
from .models import base_library, make_field, make_one_form, tm_library

Array = jax.Array


@dataclass(frozen=True)
class VerifyConfig:
    seed: int = 42
    samples: int = 64
    tol: Optional[float] = None  # overrides every defect tolerance when set


@dataclass(frozen=True)
class SuiteResult:
    name: str
    max_defect: float
    tol: float
    passed: bool
    criterion: int
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "max_defect": self.max_defect, "tol": self.tol, "pass": self.passed}


@dataclass(frozen=True)
class Suite:
    name: str
    criterion: int
    tol: float
    run: Callable  # (ctx) -> float | (float, str)
    applies: Callable = lambda M: True
    # count-style suites compare an integer against zero and ignore --tol
    fixed_tol: bool = False


class Context:
    """Shared per-model state: samples, cached lookups and the active tolerance."""

    def __init__(self, M, cfg: VerifyConfig):
        self.M = M
        self.cfg = cfg
        self.xs, self.vs = bg.sample_bundle(M, cfg.samples, cfg.seed)
        self.rng = np.random.default_rng(cfg.seed + 1)
        self.tol = 1e-7
        self._cache: dict = {}

    @property
    def m(self):
        return self.M.dim

    @property
    def flat(self) -> bool:
        return self.M.curvature == 0.0

    def cached(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    def base(self, spec: str, keys=("base_killing", "base_divergence")) -> dict:
        """Cached base defects of a library field."""
        return self.cached(("base", spec, tuple(keys)), lambda: cl.base_defects(self.M, make_field(self.M, spec, "base"), self.xs, keys))

    def tm(self, spec: str) -> dict:
        """Cached TM defects (including the frame divergence) of a TM field spec."""
        return self.cached(("tm", spec), lambda: cl.tm_defects(self.M, make_field(self.M, spec), self.xs, self.vs, self.cfg.seed))

    def unit_split(self, n: int) -> np.ndarray:
        """``n`` random split vectors per sample with unit Sasaki length, shape (n, N, 2m)."""
        out = []
        for _ in range(n):
            c = self.rng.normal(size=(len(self.xs), 2 * self.m))
            c /= np.linalg.norm(c, axis=1, keepdims=True)
            E = np.asarray(jax.vmap(lambda x: bg.orthonormal_frame(self.M, x))(jnp.asarray(self.xs)))
            out.append(np.concatenate([np.einsum("nij,nj->ni", E, c[:, : self.m]), np.einsum("nij,nj->ni", E, c[:, self.m :])], axis=1))
        return np.stack(out)

    def chart_vectors(self, n: int) -> np.ndarray:
        """Random unit-Sasaki tangent vectors in chart form, shape (n, N, 2m)."""
        S = self.unit_split(n)
        M, m = self.M, self.m

        def assemble(x, v, s):
            u = tb.TangentBundlePoint(x, v)
            return tb.as_vector(tb.assemble(M, u, tb.SplitVector(s[:m], s[m:])))

        return np.stack([vmap_np(assemble, self.xs, self.vs, s) for s in S])


def vmap_np(fn, *arrays) -> np.ndarray:
    return np.asarray(jax.vmap(fn)(*(jnp.asarray(a, dtype=float) for a in arrays)))


def sasaki_norm(M, u, S: tb.SplitVector) -> Array:
    return jnp.sqrt(jnp.abs(tb.inner_split(bg.metric_tensor(M, u.x), S, S)))


def norm_tt(M, u, W: tb.TTVector) -> Array:
    return sasaki_norm(M, u, tb.split(M, u, W))


def sub(a: tb.TTVector, b: tb.TTVector) -> tb.TTVector:
    return tb.TTVector(a.a - b.a, a.b - b.b)


def constant_split_field(M, h, v) -> tb.TMVectorField:
    h, v = jnp.asarray(h, float), jnp.asarray(v, float)
    return tb.TMVectorField(lambda u: tb.assemble(M, u, tb.SplitVector(h, v)), "const-split")


def _points(ctx, fn, *extra):
    """Evaluate ``fn(u, *extra_i)`` at every sample, vectorised."""
    M, m = ctx.M, ctx.m
    return vmap_np(lambda x, v, *e: fn(tb.TangentBundlePoint(x, v), *e), ctx.xs, ctx.vs, *extra)


# ---------------------------------------------------------------------------
# criterion 1 and 2: base geometry


def _base_identities(ctx):
    M = ctx.M

    def one(x):
        g = bg.metric_tensor(M, x)
        dg = bg.metric_derivative(M, x)
        G = bg.christoffel_symbols(M, x)
        R = bg.riemann_tensor(M, x)
        Rl = jnp.einsum("kl,lpij->kpij", g, R)
        sym = jnp.max(jnp.abs(G - jnp.swapaxes(G, 1, 2)))
        nabla_g = dg - jnp.einsum("lki,lj->kij", G, g) - jnp.einsum("lkj,il->kij", G, g)
        anti = jnp.maximum(jnp.max(jnp.abs(Rl + jnp.swapaxes(Rl, 2, 3))), jnp.max(jnp.abs(Rl + jnp.swapaxes(Rl, 0, 1))))
        bianchi = R + jnp.einsum("lijk->lkij", R) + jnp.einsum("ljki->lkij", R)
        return jnp.stack([sym, jnp.max(jnp.abs(nabla_g)), anti, jnp.max(jnp.abs(bianchi))])

    return ctx.cached("base", lambda: vmap_np(one, ctx.xs))


def suite_gamma_symmetry(ctx):
    return float(np.max(_base_identities(ctx)[:, 0]))


def suite_metric_compat(ctx):
    return float(np.max(_base_identities(ctx)[:, 1]))


def suite_curvature_antisymmetry(ctx):
    return float(np.max(_base_identities(ctx)[:, 2]))


def suite_bianchi(ctx):
    return float(np.max(_base_identities(ctx)[:, 3]))


def suite_metric_inverse(ctx):
    """``g g^-1 = I`` and Cholesky succeeds at every sample."""
    worst = 0.0
    for x in ctx.xs:
        jet = bg.metric_jet(ctx.M, x)
        worst = max(worst, float(np.max(np.abs(jet.g @ jet.ginv - np.eye(ctx.m)))))
    return worst


def suite_constant_curvature(ctx):
    M, c = ctx.M, ctx.M.curvature

    def one(x):
        g = bg.metric_tensor(M, x)
        oracle = c * (jnp.einsum("ki,pj->kpij", g, g) - jnp.einsum("kj,pi->kpij", g, g))
        return jnp.max(jnp.abs(bg.riemann_lowered(M, x) - oracle))

    return float(np.max(vmap_np(one, ctx.xs)))


def suite_scalar(ctx):
    M = ctx.M
    target = M.dim * (M.dim - 1) * M.curvature
    scal = vmap_np(lambda x: bg.scalar_curvature(M, x), ctx.xs)
    return float(np.max(np.abs(scal - target))), f"Scal = {target:g}"


def suite_ad_vs_fd(ctx):
    """AD first derivatives of the metric and of library fields against central differences."""
    M = ctx.M
    metric = jax.jit(M.metric)
    dmetric = jax.jit(lambda x: bg.metric_derivative(M, x))
    worst = 0.0
    pts = ctx.xs[: min(len(ctx.xs), 16)]
    fields = [make_field(M, s, "base") for s in base_library(M)[:4]]
    for x in pts:
        fd = np.moveaxis(bg.central_difference(lambda y: np.asarray(metric(jnp.asarray(y))), x), -1, 0)
        ad = np.asarray(dmetric(jnp.asarray(x)))
        worst = max(worst, float(np.max(np.abs(fd - ad)) / max(1.0, np.max(np.abs(ad)))))
        for X in fields:
            ad = np.asarray(jax.jacfwd(X.fn)(jnp.asarray(x)))
            fd = bg.central_difference(lambda y: np.asarray(X(jnp.asarray(y))), x)
            worst = max(worst, float(np.max(np.abs(fd - ad)) / max(1.0, np.max(np.abs(ad)))))
    return worst


def suite_killing_divergence(ctx):
    """Every library field that is Killing at all samples is divergence-free."""
    M = ctx.M
    worst = 0.0
    for s in base_library(M):
        d = ctx.base(s)
        if np.max(d["base_killing"]) < 1e-9:
            worst = max(worst, float(np.max(d["base_divergence"])))
    return worst


# ---------------------------------------------------------------------------
# criterion 3: nabla* structure


def _test_fields(ctx):
    M, m = ctx.M, ctx.m
    rng = np.random.default_rng(ctx.cfg.seed + 7)
    lib = tm_library(M)
    return [
        make_field(M, lib[2]),  # an extension
        tb.spray_field(M),
        constant_split_field(M, rng.normal(size=m), rng.normal(size=m)),
        make_field(M, lib[-4]),  # a lift of a quadratic
    ]


def suite_split_roundtrip(ctx):
    W = ctx.rng.normal(size=(len(ctx.xs), 2 * ctx.m))
    M, m = ctx.M, ctx.m

    def one(u, w):
        Wt = tb.from_vector(w, m)
        return jnp.max(jnp.abs(tb.as_vector(tb.assemble(M, u, tb.split(M, u, Wt))) - w))

    return float(np.max(_points(ctx, one, W)))


def suite_nabla_star_parallel(ctx):
    """``nabla* B = 0``, ``nabla* J = 0`` and ``nabla* g = 0`` along random directions."""
    M, m = ctx.M, ctx.m
    Ws = ctx.chart_vectors(2)
    worst = 0.0
    fields = _test_fields(ctx)
    for F1, F2 in zip(fields, fields[1:] + fields[:1]):
        for which in ("B", "JNS"):
            MF = tb.TMVectorField(lambda u, F=F1, w=which: tb.mirror_apply(M, u, F(u), w))

            def one(u, w, MF=MF, F=F1, which=which):
                W = tb.from_vector(w, m)
                lhs = tb.nabla_star_split(M, MF, u, W)
                rhs = tb.mirror_split(tb.nabla_star_split(M, F, u, W), which)
                return sasaki_norm(M, u, tb.SplitVector(lhs.h - rhs.h, lhs.v - rhs.v))

            worst = max(worst, float(np.max(_points(ctx, one, Ws[0]))))

        def metric(u, w, F1=F1, F2=F2):
            W = tb.from_vector(w, m)
            _, dg = tb.directional(lambda p: tb.sasaki_inner(M, p, F1(p), F2(p)), u, W)
            g = bg.metric_tensor(M, u.x)
            s1, s2 = tb.split(M, u, F1(u)), tb.split(M, u, F2(u))
            return jnp.abs(dg - tb.inner_split(g, tb.nabla_star_split(M, F1, u, W), s2) - tb.inner_split(g, s1, tb.nabla_star_split(M, F2, u, W)))

        worst = max(worst, float(np.max(_points(ctx, metric, Ws[1]))))
    return worst


def suite_torsion(ctx):
    """``nabla*_F1 F2 - nabla*_F2 F1 - [F1, F2] = Rc(F1, F2)`` for constant-split fields."""
    M, m = ctx.M, ctx.m
    rng = np.random.default_rng(ctx.cfg.seed + 11)
    worst = 0.0
    for _ in range(3):
        F1 = constant_split_field(M, *rng.normal(size=(2, m)))
        F2 = constant_split_field(M, *rng.normal(size=(2, m)))

        def one(u, F1=F1, F2=F2):
            t = sub(sub(tb.nabla_star(M, F2, u, F1(u)), tb.nabla_star(M, F1, u, F2(u))), tb.bracket_tm(M, F1, F2, u))
            return norm_tt(M, u, sub(t, tb.curvature_op_R(M, u, F1(u), F2(u))))

        worst = max(worst, float(np.max(_points(ctx, one))))
    return worst


def suite_canonical_derivatives(ctx):
    """``nabla*_{pi* X} xi = pi* X``, ``nabla*_{pi^* X} S = 0``, ``nabla*_{pi* X} S = pi^* X``."""
    M, m = ctx.M, ctx.m
    X = ctx.rng.normal(size=(len(ctx.xs), m))
    xi, S = tb.xi_field(M), tb.spray_field(M)

    def one(u, x):
        z = jnp.zeros(m)
        hor = tb.assemble(M, u, tb.SplitVector(x, z))
        ver = tb.TTVector(z, x)
        a = tb.nabla_star_split(M, xi, u, ver)
        b = tb.nabla_star_split(M, S, u, hor)
        c = tb.nabla_star_split(M, S, u, ver)
        return jnp.stack([
            sasaki_norm(M, u, tb.SplitVector(a.h, a.v - x)),
            sasaki_norm(M, u, b),
            sasaki_norm(M, u, tb.SplitVector(c.h - x, c.v)),
        ]).max()

    return float(np.max(_points(ctx, one, X)))


def suite_sasaki_connection(ctx):
    """Levi-Civita connection of the Sasaki metric: metric and torsion-free."""
    M, m = ctx.M, ctx.m
    fields = _test_fields(ctx)
    Ws = ctx.chart_vectors(1)[0]
    worst = 0.0
    for F1, F2 in zip(fields, fields[1:] + fields[:1]):

        def one(u, w, F1=F1, F2=F2):
            W = tb.from_vector(w, m)
            _, dg = tb.directional(lambda p: tb.sasaki_inner(M, p, F1(p), F2(p)), u, W)
            metric = dg - tb.sasaki_inner(M, u, tb.sasaki_connection(M, F1, u, W), F2(u)) - tb.sasaki_inner(
                M, u, F1(u), tb.sasaki_connection(M, F2, u, W)
            )
            tors = sub(sub(tb.sasaki_connection(M, F2, u, F1(u)), tb.sasaki_connection(M, F1, u, F2(u))), tb.bracket_tm(M, F1, F2, u))
            return jnp.maximum(jnp.abs(metric), norm_tt(M, u, tors))

        worst = max(worst, float(np.max(_points(ctx, one, Ws))))
    return worst


# ---------------------------------------------------------------------------
# criterion 4: contact and symplectic structure


def _theta(M, u, W):
    return tb.theta_omega(M, u, W, W)[0]


def suite_omega_dtheta(ctx):
    """``omega(F1, F2) = F1 theta(F2) - F2 theta(F1) - theta([F1, F2])``; also the mirror form of omega."""
    M = ctx.M
    fields = _test_fields(ctx)
    worst = 0.0
    for F1, F2 in zip(fields, fields[1:] + fields[:1]):

        def one(u, F1=F1, F2=F2):
            _, a = tb.directional(lambda p: _theta(M, p, F2(p)), u, F1(u))
            _, b = tb.directional(lambda p: _theta(M, p, F1(p)), u, F2(u))
            dtheta = a - b - _theta(M, u, tb.bracket_tm(M, F1, F2, u))
            omega = tb.theta_omega(M, u, F1(u), F2(u))[1]
            return jnp.maximum(jnp.abs(omega - dtheta), jnp.abs(omega - tb.omega_via_mirror(M, u, F1(u), F2(u))))

        worst = max(worst, float(np.max(_points(ctx, one))))
    return worst


def suite_omega_closed(ctx):
    """Cyclic sum ``g(Rc(W1, W2), B W3) + cyc = 0``."""
    M, m = ctx.M, ctx.m
    W = ctx.chart_vectors(3)

    def one(u, a, b, c):
        A, Bv, C = (tb.from_vector(w, m) for w in (a, b, c))

        def term(P, Q, R):
            return tb.sasaki_inner(M, u, tb.curvature_op_R(M, u, P, Q), tb.mirror_apply(M, u, R, "B"))

        return jnp.abs(term(A, Bv, C) + term(Bv, C, A) + term(C, A, Bv))

    return float(np.max(_points(ctx, one, *W)))


def suite_dxi_flat(ctx):
    M = ctx.M
    fields = _test_fields(ctx)
    xi = tb.xi_field(M)
    worst = 0.0

    def xiflat(p, F):
        return tb.sasaki_inner(M, p, xi(p), F(p))

    for F1, F2 in zip(fields, fields[1:] + fields[:1]):

        def one(u, F1=F1, F2=F2):
            _, a = tb.directional(lambda p: xiflat(p, F2), u, F1(u))
            _, b = tb.directional(lambda p: xiflat(p, F1), u, F2(u))
            return jnp.abs(a - b - tb.sasaki_inner(M, u, xi(u), tb.bracket_tm(M, F1, F2, u)))

        worst = max(worst, float(np.max(_points(ctx, one))))
    return worst


def suite_div_spray(ctx):
    M = ctx.M
    S = tb.spray_field(M)
    return float(np.max(np.abs(_points(ctx, lambda u: tb.divergence_tm(M, S, u)))))


# ---------------------------------------------------------------------------
# criterion 5: scalar curvature of the Sasaki metric


def brute_force_norm_sq(Rl: np.ndarray, gi: np.ndarray, v: np.ndarray) -> float:
    """``v^p v^p' R_kpij R_k'p'i'j' g^ii' g^jj' g^kk'`` by explicit summation."""
    m = len(v)
    total = 0.0
    r = range(m)
    for k in r:
        for kk in r:
            for i in r:
                for ii in r:
                    for j in r:
                        for jj in r:
                            w = gi[i, ii] * gi[j, jj] * gi[k, kk]
                            if w == 0.0:
                                continue
                            for p in r:
                                for pp in r:
                                    total += v[p] * v[pp] * Rl[k, p, i, j] * Rl[kk, pp, ii, jj] * w
    return total


def suite_sasaki_scalar(ctx):
    """Closed form ``Scal - c^2 (m-1) |v|^2 / 2``, with the norm confirmed by direct summation."""
    M, m, c = ctx.M, ctx.m, ctx.M.curvature

    def one(u):
        g = bg.metric_tensor(M, u.x)
        v2 = u.v @ g @ u.v
        closed = m * (m - 1) * c - 0.5 * c**2 * (m - 1) * v2
        return jnp.stack([tb.sasaki_scalar(M, u), closed, tb.curvature_norm_sq(M, u), 2 * c**2 * (m - 1) * v2])

    vals = _points(ctx, one)
    worst = float(np.max(np.abs(vals[:, 0] - vals[:, 1])))
    # confirm the closed-form norm by brute force on the oracle tensor
    brute = 0.0
    for x, v, row in list(zip(ctx.xs, ctx.vs, vals))[:8]:
        g = np.asarray(bg.metric_tensor(M, jnp.asarray(x)))
        oracle = c * (np.einsum("ki,pj->kpij", g, g) - np.einsum("kj,pi->kpij", g, g))
        bf = brute_force_norm_sq(oracle, np.linalg.inv(g), v)
        brute = max(brute, abs(bf - row[3]), abs(bf - row[2]))
    return max(worst, brute), f"brute-force norm defect {brute:.3g}"


# ---------------------------------------------------------------------------
# criterion 6: geodesics


def _frame_vec(M, x, coords):
    E = np.asarray(bg.orthonormal_frame(M, jnp.asarray(x)))
    c = np.zeros(M.dim)
    c[: min(len(coords), M.dim)] = coords[: M.dim]
    return E @ c


def generic_state(M) -> gd.GeodesicState:
    lo, hi = M.box()
    x0 = lo + 0.45 * (hi - lo)
    return gd.state(
        x0,
        _frame_vec(M, x0, np.array([0.4, -0.3, 0.2])),
        _frame_vec(M, x0, np.array([0.8, -0.6, 0.1])),
        _frame_vec(M, x0, np.array([0.3, 0.5, -0.2])),
    )


def suite_geodesic_closed_form(ctx):
    M, m = ctx.M, ctx.m
    name = M.name.split(":")[0]
    if ctx.flat:
        s0 = generic_state(M)
        T = 1.0
        tr = gd.integrate(M, s0, T, 1e-3)
        x = np.asarray(s0.x) + T * np.asarray(s0.xdot)
        v = np.asarray(s0.v) + T * np.asarray(s0.z)
        dx = tr.x[-1] - M.wrap(x)
        if M.periods is not None:
            p = np.asarray(M.periods)
            dx -= p * np.round(dx / p)
        return float(max(np.max(np.abs(dx)), np.max(np.abs(tr.v[-1] - v)))), "straight line"
    if name == "sphere":
        c = M.curvature
        r = 1.0 / math.sqrt(c)
        x0 = np.zeros(m)
        x0[0] = r
        xd = np.zeros(m)
        xd[1] = 1.0
        v0 = np.zeros(m)
        v0[0], v0[-1] = 0.3, 0.2
        T = 2 * math.pi / math.sqrt(c)
        tr = gd.integrate(M, gd.state(x0, v0, xd, np.zeros(m)), T, 1e-3)
        return float(max(np.max(np.abs(tr.x[-1] - x0)), np.max(np.abs(tr.v[-1] - v0)))), "great circle closure"
    # half-plane: x = 0, y = exp(t)
    tr = gd.integrate(M, gd.state([0.0, 1.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]), 1.0, 1e-3)
    return float(np.max(np.abs(tr.x[-1] - np.array([0.0, math.e])))), "vertical line y = exp(t)"


def suite_geodesic_energy(ctx):
    tr = gd.integrate(ctx.M, generic_state(ctx.M), 1.0, 1e-3)
    return tr.energy_drift


def rk4_ratio(M, s0, T=1.0, dt=0.1) -> float:
    def final(h):
        return np.concatenate([np.asarray(a) for a in gd.integrate(M, s0, T, h).state()])

    a, b, c = final(dt), final(dt / 2), final(dt / 4)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b - c))


def suite_rk4_order(ctx):
    r = rk4_ratio(ctx.M, generic_state(ctx.M))
    return abs(r - 16.0), f"ratio {r:.4f}"


def suite_natural_lift(ctx):
    M = ctx.M
    s0 = generic_state(M)
    s0 = s0._replace(z=jnp.zeros(M.dim))
    tr = gd.integrate(M, s0, 1.0, 1e-3)
    ref = gd.base_geodesic_integrate(M, s0.x, s0.xdot, s0.v, 1.0, 1e-3)
    dx = tr.x - ref.x
    if M.periods is not None:
        p = np.asarray(M.periods)
        dx -= p * np.round(dx / p)
    return float(max(np.max(np.abs(dx)), np.max(np.abs(tr.v - ref.v)), np.max(np.abs(tr.z))))


def suite_fibre_lines(ctx):
    M = ctx.M
    s0 = generic_state(M)._replace(xdot=jnp.zeros(M.dim))
    tr = gd.integrate(M, s0, 1.0, 1e-2)
    lin = np.asarray(s0.v)[None] + tr.t[:, None] * np.asarray(s0.z)[None]
    return float(max(np.max(np.abs(tr.v - lin)), np.max(np.abs(tr.x - tr.x[0]))))


# ---------------------------------------------------------------------------
# criterion 7: theorem equivalence


def _library_verdicts(ctx):
    def make():
        M, tol = ctx.M, ctx.tol
        rows = []
        for s in base_library(M):
            b = ctx.base(s)
            d = ctx.tm("ext:" + s)
            vals = [float(np.max(b["base_killing"])), float(np.max(d["killing"])), float(np.max(d["strictly_contact"])), float(np.max(d["symplectic"]))]
            rows.append((s, None, vals, [v <= tol for v in vals]))
        return rows

    return ctx.cached(("verdicts", ctx.tol), make)


def suite_theorem_equivalence(ctx):
    rows = _library_verdicts(ctx)
    bad = [s for s, _, _, v in rows if len(set(v)) != 1]
    vals = [x for _, _, vs, _ in rows for x in vs]
    below = max((x for x in vals if x <= ctx.tol), default=0.0)
    above = min((x for x in vals if x > ctx.tol), default=float("inf"))
    detail = f"{len(rows)} fields; largest passing defect {below:.2e}, smallest failing {above:.2e}"
    if bad:
        detail += "; mismatched: " + ", ".join(bad)
    return float(len(bad)), detail


def suite_divergence_extension(ctx):
    """``div X~ = 2 div X``; the TM side is the adapted-frame trace of the Levi-Civita connection."""
    M = ctx.M
    worst = 0.0
    n = min(len(ctx.xs), 16)
    for s in base_library(M):
        Xt = make_field(M, "ext:" + s)
        div_b = ctx.base(s)["base_divergence"]
        # signed base divergence
        X = make_field(M, s, "base")
        div_b = vmap_np(lambda x: jnp.trace(bg.nabla_field(M, X, x)), ctx.xs)
        div_frame = vmap_np(lambda x, v: cl.divergence_frame(cl.frame_operators(M, Xt, tb.TangentBundlePoint(x, v))), ctx.xs, ctx.vs)
        div_lc = vmap_np(lambda x, v: tb.divergence_tm(M, Xt, tb.TangentBundlePoint(x, v)), ctx.xs[:n], ctx.vs[:n])
        worst = max(worst, float(np.max(np.abs(div_frame - 2 * div_b))), float(np.max(np.abs(div_lc - 2 * div_b[:n]))))
    return worst


# ---------------------------------------------------------------------------
# criterion 8: mirrors


def suite_mirror_xi(ctx):
    lam, res = cl.mirror_fit(ctx.M, tb.xi_field(ctx.M), ctx.xs, ctx.vs)
    return max(abs(lam + 1.0), res), f"lambda = {lam:.12g}"


def suite_mirror_extension(ctx):
    M = ctx.M
    worst = 0.0
    for s in base_library(M):
        d = ctx.tm("ext:" + s)
        worst = max(worst, abs(float(d["mirror_lambda"])), float(np.max(d["mirror"])))
    return worst


def decomposed_field(M, lam: float, rng) -> tuple:
    """``X~ - lam xi + pi^star A`` with random affine ``X`` and quadratic ``A``.

    On a flat chart this is the general lam-mirror field.
    """
    m = M.dim
    a0, A = rng.normal(size=m), rng.normal(size=(m, m))
    Q = rng.normal(size=(m, m, m))
    X = bg.BaseVectorField(lambda x: jnp.asarray(a0) + jnp.asarray(A) @ x, "affine")
    A20 = lambda x: jnp.einsum("ijk,j,k->i", jnp.asarray(Q), x, x) + jnp.sin(x[0]) * jnp.ones(m)

    def fn(u):
        ext = tb.complete_lift(M, X, u)
        return tb.TTVector(ext.a, ext.b - lam * u.v + A20(u.x))

    return tb.TMVectorField(fn, "decomposed"), X


def suite_mirror_decomposition(ctx):
    rng = np.random.default_rng(ctx.cfg.seed + 3)
    worst = 0.0
    for lam in rng.normal(size=3) * 2:
        Z, _ = decomposed_field(ctx.M, float(lam), rng)
        est, res = cl.mirror_fit(ctx.M, Z, ctx.xs, ctx.vs)
        worst = max(worst, abs(est - lam), res)
    return worst


def suite_adjoint_implies_mirror(ctx):
    """0-adjoint-mirror lifts of the base library are 0-mirror.

    Restricted to ``h:``, ``v:`` and ``ext:`` lifts: the geodesic spray of a
    flat model satisfies ``L_S Bt = 0`` while ``L_S B != 0``.
    """
    M, tol = ctx.M, ctx.tol
    bad, hits = [], 0
    for b in base_library(M):
        for lift in ("h", "v", "ext"):
            d = ctx.tm(f"{lift}:{b}")
            if np.max(d["zero_adjoint_mirror"]) <= tol:
                hits += 1
                if np.max(d["zero_mirror"]) > tol:
                    bad.append(f"{lift}:{b}")
    detail = ("violations: " + ", ".join(bad)) if bad else f"no violations among {hits} 0-adjoint-mirror lifts"
    return float(len(bad)), detail


def suite_adjoint_extension(ctx):
    """Flat charts: ``X~`` is 0-adjoint-mirror exactly for affine ``X``."""
    M, m, tol = ctx.M, ctx.m, ctx.tol
    affine = ["position", "const:" + ",".join(["1"] + ["0"] * (m - 1))] + (["rotation:1,2"] if m > 1 else [])
    quad = ["poly:" + ",".join(["x1^2"] + ["0"] * (m - 1)), "gradient:" + ("x1^2*x2" if m > 1 else "x1^3")]
    wrong = 0
    for s in affine + quad:
        d = ctx.tm("ext:" + s)
        passed = float(np.max(d["zero_adjoint_mirror"])) <= tol
        wrong += int(passed != (s in affine))
    return float(wrong)


# ---------------------------------------------------------------------------
# criterion 9: 1-forms


def _form_samples(ctx):
    n = min(len(ctx.xs), 16)
    return ctx.xs[:n], ctx.vs[:n]


def _codiff(ctx, alpha, which):
    M = ctx.M
    xs, vs = _form_samples(ctx)
    mu = cl.lifted_form_field(M, alpha, which)
    return vmap_np(lambda x, v: cl.codifferential_tm(M, mu, tb.TangentBundlePoint(x, v)), xs, vs)


def _forms(ctx):
    m = ctx.m
    quad = ",".join(f"x{i + 1}*x{(i + 1) % m + 1}" for i in range(m))
    return [make_one_form(ctx.M, "const:" + ",".join(["1"] + ["0"] * (m - 1))), make_one_form(ctx.M, "poly:" + quad)]


def suite_vertical_coclosed(ctx):
    return float(max(np.max(np.abs(_codiff(ctx, a, "vertical"))) for a in _forms(ctx)))


def suite_pullback_codifferential(ctx):
    M = ctx.M
    xs, _ = _form_samples(ctx)
    worst = 0.0
    for a in _forms(ctx):
        lhs = _codiff(ctx, a, "pullback")
        rhs = vmap_np(lambda x: cl.base_codifferential(M, a, x), xs)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def suite_extension_chart_identity(ctx):
    M = ctx.M
    worst = 0.0
    for a in _forms(ctx):

        def one(u, a=a):
            x1 = cl.lift_one_form(M, a, u, "extension")
            x2 = cl.extension_via_connection(M, a, u)
            return jnp.maximum(jnp.max(jnp.abs(x1.dx - x2.dx)), jnp.max(jnp.abs(x1.dv - x2.dv)))

        worst = max(worst, float(np.max(_points(ctx, one))))
    return worst


def suite_flat_harmonic_extension(ctx):
    M, m = ctx.M, ctx.m
    rng = np.random.default_rng(ctx.cfg.seed + 5)
    alpha = make_one_form(M, "const:" + ",".join(f"{c:.6g}" for c in rng.normal(size=m)))
    mu = cl.lifted_form_field(M, alpha, "extension")
    xs, vs = _form_samples(ctx)
    delta = _codiff(ctx, alpha, "extension")
    d = vmap_np(lambda x, v: jnp.max(jnp.abs(tb.exterior_derivative_tm(M, mu, tb.TangentBundlePoint(x, v)))), xs, vs)
    return float(max(np.max(np.abs(delta)), np.max(d)))


def harmonic_chart_form(M):
    """``d(x1^2 - x2^2)``: harmonic for any conformally flat surface chart."""
    return make_one_form(M, "gradient:x1^2-x2^2")


def suite_ricci_obstruction(ctx):
    """``delta alpha~ = -Ric(v, alpha^sharp)`` for harmonic ``alpha``, and it is far from zero."""
    M = ctx.M
    alpha = harmonic_chart_form(M)
    xs, vs = _form_samples(ctx)
    delta = _codiff(ctx, alpha, "extension")
    obstruction = vmap_np(lambda x, v: cl.ricci_obstruction(M, alpha, tb.TangentBundlePoint(x, v)), xs, vs)
    base_delta = vmap_np(lambda x: cl.base_codifferential(M, alpha, x), xs)
    size = float(np.max(np.abs(delta)))
    defect = float(max(np.max(np.abs(delta - obstruction)), np.max(np.abs(base_delta)) * 1e-3))
    detail = f"max |delta alpha~| = {size:.3g}"
    if size <= 1e-3:
        # the obstruction must be visible, not just matched
        return float("inf"), detail + " (not above 1e-3)"
    return defect, detail


# ---------------------------------------------------------------------------
# criterion 10: flow oracle


def suite_flow_oracle(ctx, triples: int = 16, fields: int = 4):
    M, m = ctx.M, ctx.m
    rng = np.random.default_rng(ctx.cfg.seed + 13)
    lib = tm_library(M)
    chosen = [lib[i] for i in rng.choice(len(lib), size=fields, replace=False)]
    per = triples // fields
    W = ctx.chart_vectors(2)
    worst = 0.0
    for k, spec in enumerate(chosen):
        Z = make_field(M, spec)
        idx = rng.choice(len(ctx.xs), size=per, replace=False)
        P = np.hstack([ctx.xs[idx], ctx.vs[idx]])
        W1, W2 = W[0][idx], W[1][idx]
        lg, lB = flow_lie_derivatives(M, Z, P, W1, W2, FlowSettings())

        def formula(p, w1, w2, Z=Z):
            u = tb.point_from_vector(p, m)
            a, b = tb.from_vector(w1, m), tb.from_vector(w2, m)
            return tb.lie_metric(M, Z, u, a, b), tb.as_vector(tb.lie_B(M, Z, u, a))

        fg, fB = jax.vmap(formula)(jnp.asarray(P), jnp.asarray(W1), jnp.asarray(W2))
        worst = max(worst, float(np.max(np.abs(lg - np.asarray(fg)))), float(np.max(np.abs(lB - np.asarray(fB)))))
    return worst, "fields: " + ", ".join(chosen)


# ---------------------------------------------------------------------------
# registry


def _curved(M):
    return M.curvature not in (None, 0.0)


def _flat(M):
    return M.curvature == 0.0


def _const_curv(M):
    return M.curvature is not None


SUITES: tuple[Suite, ...] = (
    Suite("base.metric_inverse", 1, 1e-12, suite_metric_inverse),
    Suite("base.gamma_symmetry", 1, 1e-9, suite_gamma_symmetry),
    Suite("base.metric_compatibility", 1, 1e-9, suite_metric_compat),
    Suite("base.curvature_antisymmetry", 1, 1e-9, suite_curvature_antisymmetry),
    Suite("base.first_bianchi", 1, 1e-9, suite_bianchi),
    Suite("base.ad_vs_fd", 1, 1e-5, suite_ad_vs_fd),
    Suite("base.killing_divergence_free", 1, 1e-8, suite_killing_divergence),
    Suite("base.constant_curvature", 2, 1e-8, suite_constant_curvature, _const_curv),
    Suite("base.scalar_curvature", 2, 1e-8, suite_scalar, _const_curv),
    Suite("bundle.split_roundtrip", 3, 1e-12, suite_split_roundtrip),
    Suite("bundle.nabla_star_parallel", 3, 1e-8, suite_nabla_star_parallel),
    Suite("bundle.nabla_star_torsion", 3, 1e-8, suite_torsion),
    Suite("bundle.canonical_derivatives", 3, 1e-8, suite_canonical_derivatives),
    Suite("bundle.levi_civita", 3, 1e-8, suite_sasaki_connection),
    Suite("bundle.omega_dtheta", 4, 1e-8, suite_omega_dtheta),
    Suite("bundle.omega_closed", 4, 1e-9, suite_omega_closed),
    Suite("bundle.dxi_flat_closed", 4, 1e-8, suite_dxi_flat),
    Suite("bundle.spray_divergence", 4, 1e-8, suite_div_spray),
    Suite("bundle.sasaki_scalar", 5, 1e-8, suite_sasaki_scalar, _curved),
    Suite("bundle.sasaki_scalar_flat", 5, 1e-12, suite_sasaki_scalar, _flat),
    Suite("geodesic.straight_line", 6, 1e-12, suite_geodesic_closed_form, _flat),
    Suite("geodesic.closed_form", 6, 1e-6, suite_geodesic_closed_form, _curved),
    Suite("geodesic.energy_drift", 6, 1e-6, suite_geodesic_energy),
    Suite("geodesic.rk4_order", 6, 4.0, suite_rk4_order, _curved, fixed_tol=True),
    Suite("geodesic.natural_lift", 6, 1e-7, suite_natural_lift),
    Suite("geodesic.fibre_lines", 6, 1e-12, suite_fibre_lines),
    Suite("theorem.equivalence", 7, 0.0, suite_theorem_equivalence, fixed_tol=True),
    Suite("theorem.extension_divergence", 7, 1e-7, suite_divergence_extension),
    Suite("mirror.xi", 8, 1e-9, suite_mirror_xi),
    Suite("mirror.extension", 8, 1e-9, suite_mirror_extension),
    Suite("mirror.decomposition", 8, 1e-9, suite_mirror_decomposition, _flat),
    Suite("mirror.adjoint_implies_mirror", 8, 0.0, suite_adjoint_implies_mirror, fixed_tol=True),
    Suite("mirror.adjoint_extension", 8, 0.0, suite_adjoint_extension, _flat, fixed_tol=True),
    Suite("forms.vertical_coclosed", 9, 1e-7, suite_vertical_coclosed),
    Suite("forms.pullback_codifferential", 9, 1e-7, suite_pullback_codifferential),
    Suite("forms.extension_chart_identity", 9, 1e-10, suite_extension_chart_identity),
    Suite("forms.flat_harmonic_extension", 9, 1e-9, suite_flat_harmonic_extension, _flat),
    Suite("forms.ricci_obstruction", 9, 1e-7, suite_ricci_obstruction, lambda M: _curved(M) and M.dim == 2),
    Suite("lie.flow_oracle", 10, 1e-5, suite_flow_oracle),
)

SUITE_NAMES = tuple(s.name for s in SUITES)


def run_suites(M, cfg: VerifyConfig = VerifyConfig(), names=None, criteria=None) -> list[SuiteResult]:
    """Run the applicable suites on ``M`` in registry order."""
    ctx = Context(M, cfg)
    out = []
    for suite in SUITES:
        if names is not None and suite.name not in names:
            continue
        if criteria is not None and suite.criterion not in criteria:
            continue
        if not suite.applies(M):
            continue
        tol = suite.tol if (suite.fixed_tol or cfg.tol is None) else cfg.tol
        ctx.tol = cfg.tol if cfg.tol is not None else 1e-7
        val = suite.run(ctx)
        detail = ""
        if isinstance(val, tuple):
            val, detail = val
        val = float(val)
        passed = bool(np.isfinite(val) and val <= tol)
        out.append(SuiteResult(suite.name, val, tol, passed, suite.criterion, detail))
    return out
