"""Compiled vs numpy kernels on the default ground state.

Run: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from cylbubble import _pykernels
from cylbubble.exponents import default_exponents
from cylbubble.geometry import build_configuration
from cylbubble.ground_state import solve_ground_state

try:
    from cylbubble import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(gs, cfg, rng):
    tab = gs.table("U").args()
    r = np.ascontiguousarray(np.exp(rng.uniform(np.log(1e-4), np.log(1e4), 1_000_000)))
    pts = np.ascontiguousarray(rng.standard_normal((100_000, cfg.N)) * 50.0)
    return {
        "profile_eval (1e6 radii)": lambda m: m.profile_eval(r, *tab, 0),
        "bubble_sum (1e5 pts x 16 centers)": lambda m: m.bubble_sum(
            pts, cfg.all_centers, 1.0, 1.0, 2.45, *tab),
        "polygon_sum (k=4000)": lambda m: m.polygon_sum(4000, 0.01, 3.0, True),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    es = default_exponents()
    gs = solve_ground_state(es)
    cfg = build_configuration(8, 40.0, 0.5, 1.0, es, test_mode=True)
    rng = np.random.default_rng(0x5EED)
    print(f"{'kernel':38s} {'numpy [ms]':>11s} {'compiled [ms]':>14s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases(gs, cfg, rng).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{name:38s} {t_py * 1e3:11.2f} {'n/a':>14s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
        a, b = np.asarray(fn(_pykernels)), np.asarray(fn(_ckernels))
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        print(f"{name:38s} {t_py * 1e3:11.2f} {t_c * 1e3:14.2f} {t_py / t_c:8.2f} {diff:11.2e}")


if __name__ == "__main__":
    main()
