"""Integrate a Sasaki geodesic over a sphere with a parallel fibre vector.

With ``z = 0`` the base curve is a great circle and ``v`` is parallel, so
after one period both return to their initial values.

Usage: python scripts/great_circle.py [curvature] [out.csv]
"""

import math
import sys

import numpy as np

from sasaki import geodesics as gd
from sasaki.models import make_model


def main():
    c = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
    M = make_model(f"sphere:{c:g}")
    r = 1.0 / math.sqrt(c)
    s0 = gd.state([r, 0.0], [0.3, 0.2], [0.0, 1.0], [0.0, 0.0])
    T = 2 * math.pi * r
    for dt in (1e-1, 1e-2, 1e-3):
        tr = gd.integrate(M, s0, T, dt)
        err = max(np.max(np.abs(tr.x[-1] - s0.x)), np.max(np.abs(tr.v[-1] - s0.v)))
        print(f"dt = {dt:g}: closure error {err:.3e}, energy drift {tr.energy_drift:.3e}")
    if len(sys.argv) > 2:
        gd.write_csv(tr, sys.argv[2])
        print(f"wrote {sys.argv[2]}")


if __name__ == "__main__":
    main()
