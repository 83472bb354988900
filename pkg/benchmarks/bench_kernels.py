"""Compare the numba and numpy kernel paths.

    python3 benchmarks/bench_kernels.py [--depth 6] [--repeat 5]

Timings exclude the first (compiling) numba call.
"""
import argparse
import time

import numpy as np

from thetaexp import _kernels
from thetaexp.dimension import moran_bracket


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    digits = np.random.default_rng(0).integers(2, 11, size=10**6)
    loglen = -np.random.default_rng(1).uniform(1, 40, size=10**6)
    levels = args.depth - 1

    cases = {
        "enumerate 9^%d" % levels: lambda b: _kernels.enumerate_denominators(2, 2, 10, levels, 1, 2, backend=b),
        "power_sum 1e6": lambda b: _kernels.power_sum(loglen, 0.85, backend=b),
        "running 1e6": lambda b: _kernels.running_sum_max(digits, backend=b),
        "moran depth %d" % args.depth: lambda b: moran_bracket(2, 10, args.depth, backend=b),
    }
    print(f"{'case':<22}" + "".join(f"{b:>12}" for b in backends))
    for name, fn in cases.items():
        row = []
        for b in backends:
            fn(b)  # warm up / compile
            row.append(best_of(lambda: fn(b), args.repeat))
        print(f"{name:<22}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row))


if __name__ == "__main__":
    main()
