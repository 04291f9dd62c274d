"""Benchmark the numba kernels against the pure-numpy fallback.

Run as: python benchmarks/bench_kernels.py [--rows 20000] [--n 30] [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dmnlife import _kernels


def timeit(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description="Compare numba and numpy kernel paths")
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--n", type=int, default=30)
    parser.add_argument("--segments", type=int, default=2_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    x = rng.exponential(size=(args.rows, args.n))
    incr = rng.normal(size=args.segments)

    print(f"numba available: {_kernels.HAS_NUMBA}  enabled: {_kernels.NUMBA_ENABLED}")

    t_np = timeit(_kernels._delta_hat_rows_np, x, repeats=args.repeats)
    print(f"delta_hat_rows  numpy : {args.rows / t_np:12.0f} rows/s  ({t_np * 1e3:.1f} ms)")
    if _kernels.HAS_NUMBA:
        _kernels._delta_hat_rows_nb(x[:2])  # compile outside the timer
        t_nb = timeit(_kernels._delta_hat_rows_nb, x, repeats=args.repeats)
        print(f"delta_hat_rows  numba : {args.rows / t_nb:12.0f} rows/s  ({t_nb * 1e3:.1f} ms)")
        print(f"delta_hat_rows  speedup: {t_np / t_nb:.2f}x")
        a = _kernels._delta_hat_rows_np(x)
        b = _kernels._delta_hat_rows_nb(x)
        print(f"max |numpy - numba| = {np.max(np.abs(a - b)):.3e}")

    t_np = timeit(_kernels._lindley_np, incr, 0.0, repeats=args.repeats)
    print(f"lindley_ages    numpy : {args.segments / t_np:12.0f} seg/s   ({t_np * 1e3:.1f} ms)")
    if _kernels.HAS_NUMBA:
        _kernels._lindley_nb(incr[:8], 0.0)
        t_nb = timeit(_kernels._lindley_nb, incr, 0.0, repeats=args.repeats)
        print(f"lindley_ages    numba : {args.segments / t_nb:12.0f} seg/s   ({t_nb * 1e3:.1f} ms)")
        print(f"lindley_ages    speedup: {t_np / t_nb:.2f}x")


if __name__ == "__main__":
    main()
