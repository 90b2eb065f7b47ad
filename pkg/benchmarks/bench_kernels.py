"""Compare the compiled and numpy crossing kernels.

    python benchmarks/bench_kernels.py [--pairs N] [--repeat R]

Prints microseconds per pair for each backend and curvature, and the
largest disagreement between the two backends.
"""
import argparse
import timeit

import numpy as np

from ccgeom.kernels import BACKENDS


def inputs(k, r, m, seed=0):
    rng = np.random.default_rng(seed)
    t1 = r * np.sqrt(rng.random(m))
    t2 = r * np.sqrt(rng.random(m))
    phi = np.pi * rng.random(m)
    return t1, t2, phi


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--pairs", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--grid", type=int, default=64)
    args = ap.parse_args(argv)
    if "cython" not in BACKENDS:
        print("compiled backend not available; timing the numpy fallback only")
    print(f"{'k':>3} {'backend':>8} {'us/pair':>10}")
    for k in (-1, 0, 1):
        r = 1.0
        t1, t2, phi = inputs(k, r, args.pairs)
        vals = {}
        for name, mod in BACKENDS.items():
            fn = lambda: mod.cross_distance(k, r, t1, t2, phi, args.grid, 1e-12)  # noqa: E731
            best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            vals[name] = fn()[0]
            print(f"{k:>3} {name:>8} {1e6 * best / args.pairs:>10.3f}")
        if len(vals) == 2:
            diff = np.abs(vals["cython"] - vals["python"]).max()
            print(f"{k:>3} {'maxdiff':>8} {diff:>10.2e}")


if __name__ == "__main__":
    main()
