"""Built-in charted manifolds and the textual field grammar.

Models are named ``name[:params]``:

    euclidean[:m]            flat R^m                       (default m = 2)
    sphere[:c[,m]]           g = 4 (1 + c|x|^2)^-2 delta    (default c = 1, m = 2)
    halfplane                g = y^-2 delta, y >= 0.1
    torus[:m[,p1,...,pm]]    flat chart wrapping with periods (default 2 pi)

Fields are ``kind(':' args)?`` with no whitespace:

    const:c1,...,cm   position   rotation:i,j   gradient:<poly>
    poly:<p1>,...,<pk>           (k = m for base fields, 2m for TM fields)
    h:<base>  v:<base>  ext:<base>   xi   spray   skew:[[..],[..]]

Polynomials are sums of monomials such as ``2*x1^2-0.5*x2*v1+3``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Union

import jax
import jax.numpy as jnp

from .base import BaseVectorField, ChartedManifold, metric_tensor
from .bundle import TMVectorField, TTCovector, TTVector, lifted_field, spray_field, tanno_field, xi_field


class BadSpec(ValueError):
    """A model or field string failed to parse or does not fit the model."""

    def __init__(self, message: str, text: str = "", position: Optional[int] = None):
        self.text = text
        self.position = position
        where = f" at position {position} in {text!r}" if position is not None else ""
        super().__init__(message + where)


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ModelId:
    name: str
    params: tuple[float, ...] = ()

    def __str__(self):
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(_fmt(p) for p in self.params)


MODEL_NAMES = ("euclidean", "sphere", "halfplane", "torus")


def parse_model(text: str) -> ModelId:
    name, _, rest = text.partition(":")
    if name not in MODEL_NAMES:
        raise BadSpec(f"unknown model {name!r}", text, 0)
    params = []
    if rest:
        for tok in rest.split(","):
            try:
                params.append(float(tok))
            except ValueError:
                raise BadSpec(f"bad model parameter {tok!r}", text, text.index(tok)) from None
    return ModelId(name, tuple(params))


def _as_dim(value: float, text: str) -> int:
    if value != int(value) or value < 1:
        raise BadSpec(f"dimension must be a positive integer, got {value}", text)
    return int(value)


def make_model(spec: Union[ModelId, str]) -> ChartedManifold:
    mid = parse_model(spec) if isinstance(spec, str) else spec
    p = mid.params
    text = str(mid)
    if mid.name == "euclidean":
        if len(p) > 1:
            raise BadSpec("euclidean takes at most one parameter", text)
        m = _as_dim(p[0], text) if p else 2
        return ChartedManifold(
            dim=m, name=text, metric=lambda x: jnp.eye(m) + 0.0 * x[0],
            lower=(-2.0,) * m, upper=(2.0,) * m, margin=(0.0,) * m, curvature=0.0,
        )
    if mid.name == "sphere":
        if len(p) > 2:
            raise BadSpec("sphere takes at most two parameters", text)
        c = p[0] if p else 1.0
        if not c > 0:
            raise BadSpec("sphere curvature must be positive", text)
        m = _as_dim(p[1], text) if len(p) > 1 else 2
        # box inscribed in the chart ball |x| <= 10
        half = 10.0 / math.sqrt(m)

        def sphere_metric(x):
            return 4.0 / (1.0 + c * (x @ x)) ** 2 * jnp.eye(m)

        return ChartedManifold(
            dim=m, name=text, metric=sphere_metric,
            lower=(-half,) * m, upper=(half,) * m, margin=(0.0,) * m, curvature=c,
        )
    if mid.name == "halfplane":
        if p:
            raise BadSpec("halfplane takes no parameters", text)
        return ChartedManifold(
            dim=2, name=text, metric=lambda x: jnp.eye(2) / x[1] ** 2,
            lower=(-5.0, 0.0), upper=(5.0, 5.0), margin=(0.0, 0.1), curvature=-1.0,
        )
    # torus
    m = _as_dim(p[0], text) if p else 2
    periods = tuple(p[1:]) if len(p) > 1 else (2 * math.pi,) * m
    if len(periods) != m or any(q <= 0 for q in periods):
        raise BadSpec("torus needs one positive period per axis", text)
    return ChartedManifold(
        dim=m, name=text, metric=lambda x: jnp.eye(m) + 0.0 * x[0],
        lower=(0.0,) * m, upper=periods, margin=(0.0,) * m, periods=periods, curvature=0.0,
    )


# ---------------------------------------------------------------------------
# polynomials


def _fmt(c: float) -> str:
    c = float(c)
    if c == int(c) and abs(c) < 1e15:
        return str(int(c))
    return repr(c)


@dataclass(frozen=True)
class Term:
    coef: float
    factors: tuple[tuple[str, int, int], ...] = ()  # (variable kind, 1-based index, power)

    def __str__(self):
        mono = "*".join(f"{k}{i}" + (f"^{p}" if p != 1 else "") for k, i, p in self.factors)
        if not mono:
            return _fmt(self.coef)
        if self.coef == 1.0:
            return mono
        if self.coef == -1.0:
            return "-" + mono
        return _fmt(self.coef) + "*" + mono


@dataclass(frozen=True)
class Poly:
    terms: tuple[Term, ...]

    def __str__(self):
        if not self.terms:
            return "0"
        out = str(self.terms[0])
        for t in self.terms[1:]:
            s = str(t)
            out += s if s.startswith("-") else "+" + s
        return out

    def uses(self, kind: str) -> bool:
        return any(k == kind for t in self.terms for k, _, _ in t.factors)

    def max_index(self) -> int:
        return max((i for t in self.terms for _, i, _ in t.factors), default=0)

    def __call__(self, x, v=None):
        total = 0.0
        for t in self.terms:
            val = t.coef
            for k, i, p in t.factors:
                src = x if k == "x" else v
                val = val * src[i - 1] ** p
            total = total + val
        return total


_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN = re.compile(rf"(?P<num>{_NUM})|(?P<var>[xv]\d+)|(?P<op>[-+*^])")


def parse_poly(text: str, offset: int = 0, full: str = "") -> Poly:
    full = full or text
    if not text:
        raise BadSpec("empty polynomial", full, offset)
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise BadSpec(f"unexpected character {text[pos]!r}", full, offset + pos)
        toks.append((m.lastgroup, m.group(), offset + pos))
        pos = m.end()

    terms: list[Term] = []
    i = 0

    def expect_end_of_factor(j):
        return j >= len(toks) or toks[j][1] in "+-"

    while i < len(toks):
        sign = 1.0
        if toks[i][1] in "+-":
            if toks[i][1] == "-":
                sign = -1.0
            elif not terms:
                raise BadSpec("leading '+'", full, toks[i][2])
            i += 1
        elif terms:
            raise BadSpec("expected '+' or '-'", full, toks[i][2])
        if i >= len(toks):
            raise BadSpec("dangling sign", full, offset + len(text))
        coef = 1.0
        factors = []
        if toks[i][0] == "num":
            coef = float(toks[i][1])
            i += 1
            if not expect_end_of_factor(i):
                if toks[i][1] != "*":
                    raise BadSpec("expected '*' after coefficient", full, toks[i][2])
                i += 1
                if i >= len(toks) or toks[i][0] != "var":
                    raise BadSpec("expected a variable", full, toks[i][2] if i < len(toks) else offset + len(text))
        if i < len(toks) and toks[i][0] == "var":
            while True:
                kind, idx = toks[i][1][0], int(toks[i][1][1:])
                if idx < 1:
                    raise BadSpec("variable indices start at 1", full, toks[i][2])
                i += 1
                power = 1
                if i < len(toks) and toks[i][1] == "^":
                    i += 1
                    if i >= len(toks) or toks[i][0] != "num" or not toks[i][1].isdigit():
                        raise BadSpec("expected an integer power", full, toks[i][2] if i < len(toks) else offset + len(text))
                    power = int(toks[i][1])
                    i += 1
                factors.append((kind, idx, power))
                if i < len(toks) and toks[i][1] == "*":
                    i += 1
                    if i >= len(toks) or toks[i][0] != "var":
                        raise BadSpec("expected a variable", full, toks[i][2] if i < len(toks) else offset + len(text))
                    continue
                break
        elif not factors and toks[i - 1][0] != "num":
            raise BadSpec("expected a term", full, toks[i][2] if i < len(toks) else offset + len(text))
        terms.append(Term(sign * coef, tuple(factors)))
    return Poly(tuple(terms))


# ---------------------------------------------------------------------------
# field specs


LIFTS = ("h", "v", "ext")
BASE_KINDS = ("const", "position", "rotation", "gradient", "poly")
TM_KINDS = ("xi", "spray", "skew")


@dataclass(frozen=True)
class FieldSpec:
    kind: str
    args: tuple = ()
    lift: Optional[str] = None

    def __str__(self):
        body = self.kind
        if self.kind in ("const",):
            body += ":" + ",".join(_fmt(a) for a in self.args)
        elif self.kind == "rotation":
            body += ":" + ",".join(str(a) for a in self.args)
        elif self.kind in ("gradient", "poly"):
            body += ":" + ",".join(str(a) for a in self.args)
        elif self.kind == "skew":
            body += ":[" + ",".join("[" + ",".join(_fmt(c) for c in row) + "]" for row in self.args) + "]"
        return f"{self.lift}:{body}" if self.lift else body


def parse_field(text: str) -> FieldSpec:
    if not text or any(ch.isspace() for ch in text):
        raise BadSpec("field spec must be non-empty and whitespace-free", text, 0)
    head, sep, rest = text.partition(":")
    if head in LIFTS:
        if not sep:
            raise BadSpec("lift prefix needs a base field", text, len(head))
        inner = _parse_body(rest, len(head) + 1, text)
        if inner.kind in TM_KINDS:
            raise BadSpec(f"cannot lift {inner.kind!r}", text, len(head) + 1)
        return FieldSpec(inner.kind, inner.args, head)
    return _parse_body(text, 0, text)


def _parse_numbers(s: str, offset: int, full: str, cast=float) -> tuple:
    out = []
    pos = offset
    for tok in s.split(","):
        try:
            out.append(cast(tok))
        except ValueError:
            raise BadSpec(f"bad number {tok!r}", full, pos) from None
        pos += len(tok) + 1
    return tuple(out)


def _parse_matrix(s: str, offset: int, full: str) -> tuple:
    if not (s.startswith("[[") and s.endswith("]]")):
        raise BadSpec("matrix must look like [[a,b],[c,d]]", full, offset)
    rows = []
    pos = offset + 1
    for chunk in s[1:-1].split("],["):
        body = chunk.strip("[]")
        rows.append(_parse_numbers(body, pos + 1, full))
        pos += len(chunk) + 3
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise BadSpec("matrix must be square", full, offset)
    return tuple(rows)


def _parse_body(s: str, offset: int, full: str) -> FieldSpec:
    kind, sep, args = s.partition(":")
    if kind in ("position", "xi", "spray"):
        if sep:
            raise BadSpec(f"{kind!r} takes no arguments", full, offset + len(kind))
        return FieldSpec(kind)
    if kind not in BASE_KINDS + TM_KINDS:
        raise BadSpec(f"unknown field kind {kind!r}", full, offset)
    if not args:
        raise BadSpec(f"{kind!r} needs arguments", full, offset + len(kind))
    start = offset + len(kind) + 1
    if kind == "const":
        return FieldSpec(kind, _parse_numbers(args, start, full))
    if kind == "rotation":
        idx = _parse_numbers(args, start, full, int)
        if len(idx) != 2 or idx[0] == idx[1] or min(idx) < 1:
            raise BadSpec("rotation needs two distinct 1-based indices", full, start)
        return FieldSpec(kind, idx)
    if kind == "gradient":
        return FieldSpec(kind, (parse_poly(args, start, full),))
    if kind == "poly":
        polys = []
        pos = start
        for chunk in args.split(","):
            polys.append(parse_poly(chunk, pos, full))
            pos += len(chunk) + 1
        return FieldSpec(kind, tuple(polys))
    return FieldSpec(kind, _parse_matrix(args, start, full))


def _base_field(M: ChartedManifold, spec: FieldSpec) -> BaseVectorField:
    m = M.dim
    name = str(FieldSpec(spec.kind, spec.args))
    if spec.kind == "const":
        if len(spec.args) != m:
            raise BadSpec(f"const needs {m} components", name)
        c = jnp.asarray(spec.args, dtype=float)
        return BaseVectorField(lambda x: c + 0.0 * x, name)
    if spec.kind == "position":
        return BaseVectorField(lambda x: 1.0 * x, name)
    if spec.kind == "rotation":
        i, j = spec.args
        if max(i, j) > m:
            raise BadSpec(f"rotation index exceeds dimension {m}", name)

        def rot(x):
            out = jnp.zeros_like(x)
            return out.at[i - 1].set(-x[j - 1]).at[j - 1].set(x[i - 1])

        return BaseVectorField(rot, name)
    if spec.kind == "gradient":
        (P,) = spec.args
        _check_poly(P, m, allow_v=False, text=name)
        dP = jax.grad(lambda x: 1.0 * P(x))
        return BaseVectorField(lambda x: jnp.linalg.solve(metric_tensor(M, x), dP(x)), name)
    if spec.kind == "poly":
        if len(spec.args) != m:
            raise BadSpec(f"base poly field needs {m} components", name)
        for P in spec.args:
            _check_poly(P, m, allow_v=False, text=name)
        polys = spec.args
        return BaseVectorField(lambda x: jnp.stack([1.0 * P(x) + 0.0 * x[0] for P in polys]), name)
    raise BadSpec(f"{spec.kind!r} is not a base field", name)


def _check_poly(P: Poly, m: int, allow_v: bool, text: str):
    if P.max_index() > m:
        raise BadSpec(f"variable index exceeds dimension {m}", text)
    if not allow_v and P.uses("v"):
        raise BadSpec("base fields cannot depend on fibre variables", text)


def make_field(M: ChartedManifold, spec: Union[FieldSpec, str], target: str = "auto"):
    """Build a base field, TM field or 1-form from a spec.

    ``target`` is ``"base"``, ``"tm"``, ``"form"`` or ``"auto"`` (TM when the
    spec is a lift, a TM-only kind or a ``2m``-component poly, otherwise base).
    """
    spec = parse_field(spec) if isinstance(spec, str) else spec
    m = M.dim
    if target == "auto":
        tm_poly = spec.kind == "poly" and len(spec.args) == 2 * m
        target = "tm" if (spec.lift or spec.kind in TM_KINDS or tm_poly) else "base"
    text = str(spec)
    if target == "base":
        if spec.lift or spec.kind in TM_KINDS:
            raise BadSpec("lifted and TM-only kinds are not base fields", text)
        return _base_field(M, spec)
    if target == "form":
        return make_one_form(M, spec)
    if target != "tm":
        raise ValueError(f"unknown target {target!r}")
    if spec.lift:
        return lifted_field(M, _base_field(M, FieldSpec(spec.kind, spec.args)), spec.lift)
    if spec.kind == "xi":
        return xi_field(M)
    if spec.kind == "spray":
        return spray_field(M)
    if spec.kind == "skew":
        P = spec.args
        if len(P) != m:
            raise BadSpec(f"skew matrix must be {m}x{m}", text)
        return TMVectorField(tanno_field(M, P).fn, text)
    if spec.kind == "poly":
        if len(spec.args) != 2 * m:
            raise BadSpec(f"TM poly field needs {2 * m} components", text)
        for P in spec.args:
            _check_poly(P, m, allow_v=True, text=text)
        polys = spec.args

        def fn(u):
            vals = jnp.stack([1.0 * P(u.x, u.v) + 0.0 * u.x[0] for P in polys])
            return TTVector(vals[:m], vals[m:])

        return TMVectorField(fn, text)
    raise BadSpec(f"{spec.kind!r} needs a lift prefix to act on TM", text)


@dataclass(frozen=True, eq=False)
class OneFormField:
    """A 1-form ``f_i dx^i`` on the chart, ``fn(x) -> (m,)``."""

    fn: object
    name: str = "alpha"

    def __call__(self, x):
        return self.fn(x)


def make_one_form(M: ChartedManifold, spec: Union[FieldSpec, str]) -> OneFormField:
    spec = parse_field(spec) if isinstance(spec, str) else spec
    m = M.dim
    text = str(spec)
    if spec.lift or spec.kind in TM_KINDS or spec.kind in ("position", "rotation"):
        # vector-valued kinds become 1-forms through the metric
        X = _base_field(M, FieldSpec(spec.kind, spec.args))
        if spec.lift or spec.kind in TM_KINDS:
            raise BadSpec("1-forms live on the base", text)
        return OneFormField(lambda x: metric_tensor(M, x) @ X(x), text)
    if spec.kind == "const":
        if len(spec.args) != m:
            raise BadSpec(f"const needs {m} components", text)
        c = jnp.asarray(spec.args, dtype=float)
        return OneFormField(lambda x: c + 0.0 * x, text)
    if spec.kind == "gradient":
        (P,) = spec.args
        _check_poly(P, m, allow_v=False, text=text)
        return OneFormField(jax.grad(lambda x: 1.0 * P(x)), text)
    if len(spec.args) != m:
        raise BadSpec(f"1-form needs {m} components", text)
    polys = spec.args
    for P in polys:
        _check_poly(P, m, allow_v=False, text=text)
    return OneFormField(lambda x: jnp.stack([1.0 * P(x) + 0.0 * x[0] for P in polys]), text)


# ---------------------------------------------------------------------------
# libraries


def base_library(M: ChartedManifold) -> list[str]:
    """Named base fields used by the theorem suites: rotations, constants,
    position, a gradient, quadratics, and the model's extra Killing fields."""
    m = M.dim
    unit = lambda k: "const:" + ",".join("1" if i == k else "0" for i in range(m))
    zeros = ["0"] * m
    quad = list(zeros)
    quad[0] = "x1^2"
    quad2 = list(zeros)
    quad2[-1] = f"x1*x{m}+x{m}^2" if m > 1 else "x1^3"
    specs = []
    if m > 1:
        specs += ["rotation:1,2"]
    if m > 2:
        specs += [f"rotation:2,{m}"]
    specs += [unit(0), unit(m - 1) if m > 1 else "const:-2", "position"]
    specs += ["gradient:" + ("x1^2-x2^2" if m > 1 else "x1^3")]
    specs += ["poly:" + ",".join(quad), "poly:" + ",".join(quad2)]
    name = M.name.split(":")[0]
    if name == "sphere" and m == 2:
        c = _fmt(M.curvature)
        specs += [
            f"poly:1+{c}*x1^2-{c}*x2^2,{_fmt(2 * M.curvature)}*x1*x2",
            f"poly:{_fmt(2 * M.curvature)}*x1*x2,1-{c}*x1^2+{c}*x2^2",
        ]
    if name == "halfplane":
        specs += ["poly:x1^2-x2^2,2*x1*x2"]
    return [str(parse_field(s)) for s in specs]


def tm_library(M: ChartedManifold) -> list[str]:
    """TM fields: every lift of the base library plus xi, spray and a Tanno field."""
    out = []
    for s in base_library(M):
        out += [f"h:{s}", f"v:{s}", f"ext:{s}"]
    out += ["xi", "spray"]
    if M.dim >= 2:
        rows = [["0"] * M.dim for _ in range(M.dim)]
        rows[0][1], rows[1][0] = "1", "-1"
        out.append("skew:[" + ",".join("[" + ",".join(r) + "]" for r in rows) + "]")
    return out
