"""Error of RK4 Sasaki geodesics against step size on a curved model.

The successive-difference ratio ``|y_h - y_{h/2}| / |y_{h/2} - y_{h/4}|``
should approach 16 for a fourth-order method.

Usage: python scripts/rk4_convergence.py [model]
"""

import sys

import numpy as np

from sasaki import geodesics as gd
from sasaki.models import make_model
from sasaki.suites import generic_state


def main():
    M = make_model(sys.argv[1] if len(sys.argv) > 1 else "sphere:1")
    s0 = generic_state(M)
    finals = {}
    for dt in [0.2 / 2**k for k in range(6)]:
        tr = gd.integrate(M, s0, 1.0, dt)
        finals[dt] = np.concatenate([np.asarray(a) for a in tr.state()])
    dts = sorted(finals, reverse=True)
    print(f"{'dt':>10s} {'|y_h - y_h/2|':>16s} {'ratio':>8s}")
    prev = None
    for a, b in zip(dts, dts[1:]):
        d = float(np.linalg.norm(finals[a] - finals[b]))
        ratio = f"{prev / d:8.3f}" if prev else ""
        print(f"{a:10.5f} {d:16.3e} {ratio}")
        prev = d


if __name__ == "__main__":
    main()
