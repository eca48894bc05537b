"""Time the numba and numpy backends of the two hot kernels.

    python benchmarks/bench_kernels.py [--repeat 3]

Setting MONOCONVEX_DISABLE_NUMBA=1 makes numpy the default backend for the
library; this script always times both explicitly when numba is importable.
"""

import argparse
import time

import numpy as np

from monoconvex import kernels
from monoconvex.functions import split_closure
from monoconvex.instances import BoxWindow, LatticeZd


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def closure_case(seed, d, n, span):
    rng = np.random.default_rng(seed)
    pts = rng.integers(-span, span + 1, size=(n, d))
    lo, hi = [-span] * d, [span] * d
    return lambda backend: kernels.lattice_closure(pts, lo, hi, d + 1, 4, backend=backend)


def minplus_case(seed, radius):
    rng = np.random.default_rng(seed)
    S = LatticeZd(1)
    W = BoxWindow.cube(1, radius)
    vals = {x: int(v) for x, v in zip(S.enumerate(W), rng.integers(1, 20, 2 * radius + 1))}
    return lambda backend: split_closure(S, W, vals, backend=backend)


CASES = [
    ("lattice_closure d=2 n=6", closure_case(0, 2, 6, 6)),
    ("lattice_closure d=3 n=5", closure_case(1, 3, 5, 4)),
    ("minplus_closure |W|=61", minplus_case(2, 30)),
    ("minplus_closure |W|=161", minplus_case(3, 80)),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'case':28s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup")
    for name, case in CASES:
        row, outs = [], []
        for b in backends:
            if b == "numba":
                case(b)  # compile outside the timed region
            t, out = best_of(lambda: case(b), args.repeat)
            row.append(t)
            outs.append(out)
        if len(outs) == 2 and outs[0] != outs[1]:
            raise SystemExit(f"{name}: backends disagree")
        speed = f"{row[0] / row[1]:8.1f}x" if len(row) == 2 else "      n/a"
        print(f"{name:28s} " + " ".join(f"{t:10.4f}" for t in row) + f" {speed}")


if __name__ == "__main__":
    main()
