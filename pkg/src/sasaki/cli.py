"""Command-line entry point.

    sasaki verify   --model sphere:1 [--seed 42] [--samples 64] [--tol T] [--criterion K ...]
    sasaki geodesic --model sphere:1 --x 1,0 --v 0.3,0.2 --xdot 0,1 (--z .. | --vdot ..) --T 6.28 [--dt 1e-3] [--out traj.csv]
    sasaki classify --model sphere:1 --field ext:rotation:1,2
    sasaki scalar   --model sphere:1 --x 0,0 --v 1,0

``--format`` selects ``table`` (default), ``json`` or ``csv``.  Exit codes:
0 success, 1 a verification suite failed, 2 bad model/field/point, 3 the
geodesic left the chart or blew up (the partial CSV is still written).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO

import jax.numpy as jnp
import numpy as np

from . import __version__
from . import base as bg
from . import bundle as tb
from . import classifiers as cl
from . import geodesics as gd
from .models import BadSpec, FieldSpec, ModelId, make_field, make_model, parse_field, parse_model
from .suites import VerifyConfig, run_suites

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3
FORMATS = ("table", "json", "csv")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a CLI run; equal configs give identical JSON."""

    command: str
    model: ModelId
    seed: int = 42
    samples: int = 64
    tol: Optional[float] = None
    output: str = "table"
    field: Optional[str] = None
    criteria: Optional[tuple[int, ...]] = None
    x: Optional[tuple[float, ...]] = None
    v: Optional[tuple[float, ...]] = None
    xdot: Optional[tuple[float, ...]] = None
    z: Optional[tuple[float, ...]] = None
    vdot: Optional[tuple[float, ...]] = None
    T: Optional[float] = None
    dt: Optional[float] = None
    out: Optional[str] = None

    def as_dict(self) -> dict:
        d = {"command": self.command, "model": str(self.model)}
        for k in ("seed", "samples", "tol", "output", "field", "criteria", "x", "v", "xdot", "z", "vdot", "T", "dt", "out"):
            val = getattr(self, k)
            if val is not None:
                d[k] = list(val) if isinstance(val, tuple) else val
        return d


# ---------------------------------------------------------------------------
# output helpers


def fmt_float(x: float) -> str:
    """17 significant digits, or ``null`` for non-finite values."""
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    # keep it a JSON float literal
    if all(c not in s for c in ".en"):
        s += ".0"
    return s


def dumps(obj) -> str:
    """Deterministic JSON with every float written at 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def emit_json(cfg: RunConfig, rows: list[dict], stream: TextIO, **extra) -> None:
    doc = {"config": cfg.as_dict(), "suites": rows, **extra, "version": __version__}
    stream.write(dumps(doc) + "\n")


def emit_table(rows: list[dict], stream: TextIO, extra_cols: Sequence[str] = ()) -> None:
    width = max([len(r["name"]) for r in rows] + [4])
    head = f"{'name':<{width}}  {'max_defect':>12}  {'tol':>9}  verdict"
    for c in extra_cols:
        head += f"  {c}"
    stream.write(head + "\n")
    for r in rows:
        line = f"{r['name']:<{width}}  {r['max_defect']:>12.4e}  {r['tol']:>9.1e}  {'PASS' if r['pass'] else 'FAIL'}"
        for c in extra_cols:
            if c in r:
                line += f"  {r[c]:.12g}"
        stream.write(line + "\n")


def emit_csv(rows: list[dict], stream: TextIO, extra_cols: Sequence[str] = ()) -> None:
    stream.write(",".join(["name", "max_defect", "tol", "pass", *extra_cols]) + "\n")
    for r in rows:
        cells = [r["name"], fmt_float(r["max_defect"]), fmt_float(r["tol"]), "true" if r["pass"] else "false"]
        cells += [fmt_float(r[c]) if c in r else "" for c in extra_cols]
        stream.write(",".join(cells) + "\n")


def emit(cfg: RunConfig, rows: list[dict], stream: TextIO, extra_cols: Sequence[str] = (), **extra) -> None:
    if cfg.output == "json":
        emit_json(cfg, rows, stream, **extra)
    elif cfg.output == "csv":
        emit_csv(rows, stream, extra_cols)
    else:
        emit_table(rows, stream, extra_cols)


def parse_vector(text: Optional[str], m: int, name: str) -> Optional[tuple[float, ...]]:
    if text is None:
        return None
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise BadSpec(f"--{name} must be comma-separated numbers", text) from None
    if len(vals) != m:
        raise BadSpec(f"--{name} needs {m} components, got {len(vals)}", text)
    if not all(math.isfinite(c) for c in vals):
        raise BadSpec(f"--{name} must be finite", text)
    return vals


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig, stream: TextIO = sys.stdout) -> int:
    M = make_model(cfg.model)
    results = run_suites(M, VerifyConfig(cfg.seed, cfg.samples, cfg.tol), criteria=cfg.criteria)
    rows = [r.as_dict() for r in results]
    emit(cfg, rows, stream)
    ok = all(r.passed for r in results)
    if cfg.output == "table":
        n_fail = sum(not r.passed for r in results)
        stream.write(f"{len(results) - n_fail}/{len(results)} suites passed on {M.name}\n")
    return EXIT_OK if ok else EXIT_FAIL


def _classify_target(M, spec: FieldSpec):
    """TM field to classify plus the underlying base field, if any.

    A bare base spec is classified through its complete lift.
    """
    if spec.lift or spec.kind in ("xi", "spray", "skew"):
        Z = make_field(M, spec, "tm")
        X = make_field(M, FieldSpec(spec.kind, spec.args), "base") if spec.lift else None
        return Z, X
    if spec.kind == "poly" and len(spec.args) == 2 * M.dim:
        return make_field(M, spec, "tm"), None
    X = make_field(M, spec, "base")
    return tb.lifted_field(M, X, "ext"), X


def cmd_classify(cfg: RunConfig, stream: TextIO = sys.stdout) -> int:
    M = make_model(cfg.model)
    if cfg.field is None:
        raise BadSpec("classify needs --field")
    spec = parse_field(cfg.field)
    Z, X = _classify_target(M, spec)
    xs, vs = bg.sample_bundle(M, cfg.samples, cfg.seed)
    tol = cfg.tol if cfg.tol is not None else cl.DEFAULT_TOL
    reports = cl.classify(M, Z, xs, vs, tol, base=X, seed=cfg.seed)
    rows = []
    for r in reports:
        d = r.as_dict()
        if r.value is not None:
            d["lambda"] = d.pop("value")
        rows.append(d)
    emit(cfg, rows, stream, extra_cols=("lambda",))
    if cfg.output == "table":
        lam = next(r.value for r in reports if r.name == "mirror")
        stream.write(f"mirror lambda = {lam:.12g}\n")
    return EXIT_OK


def cmd_scalar(cfg: RunConfig, stream: TextIO = sys.stdout) -> int:
    M = make_model(cfg.model)
    x = np.asarray(cfg.x if cfg.x is not None else M.wrap(np.mean(M.box(), axis=0)), float)
    v = np.asarray(cfg.v if cfg.v is not None else np.zeros(M.dim), float)
    if not M.contains(x):
        raise bg.OutOfDomain(f"point {x.tolist()} outside the chart of {M.name}")
    u = tb.point(jnp.asarray(M.wrap(x)), jnp.asarray(v))
    vals = {
        "scal": float(bg.scalar_curvature(M, u.x)),
        "curvature_norm_sq": float(tb.curvature_norm_sq(M, u)),
        "sasaki_scal": float(tb.sasaki_scalar(M, u)),
    }
    if cfg.output == "json":
        emit_json(cfg, [], stream, result=vals)
    elif cfg.output == "csv":
        stream.write(",".join(vals) + "\n" + ",".join(fmt_float(c) for c in vals.values()) + "\n")
    else:
        for k, c in vals.items():
            stream.write(f"{k:<18} {c:.17g}\n")
    return EXIT_OK


def cmd_geodesic(cfg: RunConfig, stream: TextIO = sys.stdout) -> int:
    M = make_model(cfg.model)
    m = M.dim
    x = cfg.x if cfg.x is not None else tuple(M.wrap(np.mean(M.box(), axis=0)))
    v = cfg.v if cfg.v is not None else (0.0,) * m
    xdot = cfg.xdot if cfg.xdot is not None else (0.0,) * m
    if not M.contains(x):
        raise bg.OutOfDomain(f"initial point {list(x)} outside the chart of {M.name}")
    if cfg.vdot is not None:
        s0 = gd.state_from_vdot(M, x, v, xdot, cfg.vdot)
    else:
        s0 = gd.state(x, v, xdot, cfg.z if cfg.z is not None else (0.0,) * m)
    T = cfg.T if cfg.T is not None else 1.0
    dt = cfg.dt if cfg.dt is not None else 1e-3
    if not (T > 0 and dt > 0):
        raise BadSpec("--T and --dt must be positive")
    code, note = EXIT_OK, None
    try:
        traj = gd.integrate(M, s0, T, dt)
    except (gd.DomainExit, gd.NonFinite) as exc:
        traj, code, note = exc.trajectory, EXIT_DOMAIN, str(exc)
    if cfg.out:
        gd.write_csv(traj, cfg.out)
    if cfg.output == "csv":
        if not cfg.out:
            gd.write_csv(traj, stream)
        return code
    final = traj.state()
    result = {
        "t": float(traj.t[-1]),
        "x": np.asarray(final.x).tolist(),
        "v": np.asarray(final.v).tolist(),
        "xdot": np.asarray(final.xdot).tolist(),
        "z": np.asarray(final.z).tolist(),
        "energy_drift": traj.energy_drift,
        "steps": len(traj) - 1,
        "exit": traj.exit_reason,
    }
    if cfg.output == "json":
        emit_json(cfg, [], stream, result=result)
    else:
        for k, val in result.items():
            if isinstance(val, list):
                val = " ".join(f"{c:.17g}" for c in val)
            elif isinstance(val, float):
                val = f"{val:.17g}"
            stream.write(f"{k:<13} {val}\n")
    if note:
        sys.stderr.write(f"sasaki: {note}\n")
    return code


COMMANDS = {"verify": cmd_verify, "geodesic": cmd_geodesic, "classify": cmd_classify, "scalar": cmd_scalar}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="euclidean:2", help="name[:params], e.g. sphere:1 or torus:2")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--samples", type=int, default=64)
    common.add_argument("--tol", type=float, default=None, help="override tolerances")
    common.add_argument("--format", choices=FORMATS, default="table", dest="output")

    p = argparse.ArgumentParser(prog="sasaki", description="Numerical checks for the Sasaki metric on TM.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", parents=[common], help="run the verification suites on a model")
    pv.add_argument("--criterion", type=int, action="append", dest="criteria", help="restrict to criterion K (repeatable)")

    pg = sub.add_parser("geodesic", parents=[common], help="integrate a Sasaki geodesic")
    for name in ("x", "v", "xdot"):
        pg.add_argument(f"--{name}", help="comma-separated components")
    grp = pg.add_mutually_exclusive_group()
    grp.add_argument("--z", help="covariant fibre velocity")
    grp.add_argument("--vdot", help="chart fibre velocity")
    pg.add_argument("--T", type=float, default=1.0)
    pg.add_argument("--dt", type=float, default=1e-3)
    pg.add_argument("--out", help="trajectory CSV path")

    pc = sub.add_parser("classify", parents=[common], help="classify a vector field")
    pc.add_argument("--field", required=True)

    ps = sub.add_parser("scalar", parents=[common], help="scalar curvature of the Sasaki metric at u")
    ps.add_argument("--x")
    ps.add_argument("--v")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    model = parse_model(ns.model)
    if ns.samples < 1:
        raise BadSpec("--samples must be positive")
    if not 0 <= ns.seed < 2**64:
        raise BadSpec("--seed must be a 64-bit unsigned integer")
    if ns.tol is not None and not ns.tol > 0:
        raise BadSpec("--tol must be positive")
    kw = {}
    if ns.command in ("geodesic", "scalar"):
        m = make_model(model).dim
        for name in ("x", "v", "xdot", "z", "vdot"):
            if hasattr(ns, name):
                kw[name] = parse_vector(getattr(ns, name), m, name)
    if ns.command == "geodesic":
        kw.update(T=ns.T, dt=ns.dt, out=ns.out)
    if ns.command == "classify":
        kw["field"] = ns.field
    if ns.command == "verify" and ns.criteria:
        kw["criteria"] = tuple(sorted(set(ns.criteria)))
    return RunConfig(ns.command, model, ns.seed, ns.samples, ns.tol, ns.output, **kw)


def main(argv: Optional[Sequence[str]] = None, stream: TextIO = None) -> int:
    stream = stream if stream is not None else sys.stdout
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg, stream)
    except (BadSpec, bg.OutOfDomain) as exc:
        sys.stderr.write(f"sasaki: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
