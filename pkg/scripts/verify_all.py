"""Run every verification suite on the four reference models and print a table.

Usage: python scripts/verify_all.py [--samples N] [--seed S] [model ...]
"""

import argparse
import time

from sasaki.models import make_model
from sasaki.suites import VerifyConfig, run_suites

DEFAULT_MODELS = ["euclidean:2", "sphere:1", "halfplane", "torus:2"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("models", nargs="*", default=DEFAULT_MODELS)
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    cfg = VerifyConfig(seed=args.seed, samples=args.samples)
    failed = 0
    for spec in args.models:
        t0 = time.perf_counter()
        res = run_suites(make_model(spec), cfg)
        dt = time.perf_counter() - t0
        print(f"== {spec} ({dt:.1f} s)")
        for r in res:
            flag = "ok  " if r.passed else "FAIL"
            print(f"  {flag} c{r.criterion:<2d} {r.name:<40s} {r.max_defect:10.3e} / {r.tol:.0e}  {r.detail}")
        failed += sum(not r.passed for r in res)
    print(f"{failed} failing suite(s)")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
