"""Benchmark the two distance-transform backends against each other.

Usage:
    python benchmarks/edt_benchmark.py [--sizes 32,64,128] [--repeats 3]

The numba path is warmed up once before timing so compilation is excluded.
The numpy fallback is O(n^2) per line, so keep its sizes moderate.
"""

import argparse
import time

import numpy as np

from carvemix import _kernels


def time_backend(mask, weights, backend, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        _kernels.squared_edt(mask, weights, backend=backend)
        _kernels.squared_edt(~mask, weights, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="32,64,128")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--numpy-max", type=int, default=64,
                        help="skip the numpy fallback above this edge length")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = np.random.default_rng(0)
    warm = rng.random((8, 8, 8)) < 0.2
    _kernels.squared_edt(warm, (1.0, 1.0, 1.0), backend="numba")

    print(f"{'size':>6} {'numba [s]':>12} {'numpy [s]':>12} {'speedup':>9}")
    for n in sizes:
        mask = rng.random((n, n, n)) < 0.02
        mask.flat[0] = True
        t_nb = time_backend(mask, (1.0, 1.0, 1.0), "numba", args.repeats)
        if n <= args.numpy_max:
            t_np = time_backend(mask, (1.0, 1.0, 1.0), "numpy", max(1, args.repeats // 2))
            print(f"{n:>6} {t_nb:>12.4f} {t_np:>12.4f} {t_np / t_nb:>8.1f}x")
        else:
            print(f"{n:>6} {t_nb:>12.4f} {'(skipped)':>12} {'':>9}")


if __name__ == "__main__":
    main()
