"""Lattice energy of base fields viewed as maps into TM, against resolution.

Usage: python scripts/energy_convergence.py [model] [field ...]
"""

import sys

from sasaki import classifiers as cl
from sasaki.models import make_field, make_model


def main():
    M = make_model(sys.argv[1] if len(sys.argv) > 1 else "euclidean:2")
    fields = sys.argv[2:] or ["const:1,0", "position", "rotation:1,2", "poly:0,x1*x2+x2^2"]
    ns = [4, 8, 16, 32]
    print(f"{'field':<20s}" + "".join(f"{'n=' + str(n):>16s}" for n in ns))
    for spec in fields:
        X = make_field(M, spec, "base")
        print(f"{spec:<20s}" + "".join(f"{cl.energy_estimate(M, X, n):16.10f}" for n in ns))


if __name__ == "__main__":
    main()
