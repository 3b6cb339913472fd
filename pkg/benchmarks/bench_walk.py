"""Time the numba walk kernel against the numpy twin on the same workload.

    python3 benchmarks/bench_walk.py [--n 100000] [--vertices 16]
"""

import argparse
import time

import numpy as np

from bvheat import _kernels
from bvheat.builtins import cycle
from bvheat.heat import build_heat_operator
from bvheat.stochastic import build_walk


def run(use_numba, W, v, times, n, seed=0):
    t0 = time.perf_counter()
    out = _kernels.simulate(seed, 0, n, times, *W.kernel_arrays(), v, use_numba=use_numba)
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--vertices", type=int, default=16)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    M = cycle(args.vertices)
    W = build_walk(M, build_heat_operator(M))
    v = np.zeros(args.vertices)
    v[0] = float(args.vertices)
    times = np.array([0.5, 1.0, 2.0])
    if _kernels.HAVE_NUMBA:
        run(True, W, v, times, 10)  # compile
    rows = []
    for name, flag in (("numpy", False), ("numba", True)):
        if flag and not _kernels.HAVE_NUMBA:
            continue
        best = min(run(flag, W, v, times, args.n)[0] for _ in range(args.repeats))
        rows.append((name, best))
    a = run(False, W, v, times, 1000)[1]
    same = True
    if _kernels.HAVE_NUMBA:
        b = run(True, W, v, times, 1000)[1]
        same = np.array_equal(a[1], b[1]) and np.allclose(a[0], b[0], rtol=1e-12, atol=0)
    print(f"cycle({args.vertices}), {args.n} paths, horizon {times[-1]}")
    for name, t in rows:
        print(f"{name:6s} {t:8.3f} s  {args.n / t:12.0f} paths/s")
    print(f"identical paths: {same}")


if __name__ == "__main__":
    main()
