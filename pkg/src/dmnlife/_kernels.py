"""Hot numeric kernels: numba-jitted inner loops with a pure-numpy fallback.

The numba path is used when numba imports cleanly; set the environment
variable ``DMNLIFE_NO_NUMBA=1`` to force the numpy path.  Both paths agree
to floating-point roundoff (see tests/test_kernels.py) and each path is
deterministic on its own.  ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("DMNLIFE_NO_NUMBA", "") not in ("", "0")

HAS_NUMBA = False
if not NUMBA_DISABLED:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False

NUMBA_ENABLED = HAS_NUMBA and not NUMBA_DISABLED


def _delta_hat_rows_np(x: np.ndarray) -> np.ndarray:
    # Pairwise-kernel mean per row via sorted prefix sums, O(n log n) per row.
    # Equivalent to (1/(n(n-1))) sum_{i != j} Phi(x_i, x_j); the cross terms
    # (1/2)x_i x_j^2 - (1/2)x_i^2 x_j cancel over ordered pairs, and the
    # min-terms reduce to prefix sums over the sorted sample.
    r, n = x.shape
    s = np.sort(x, axis=1)
    s2 = s * s
    s3 = np.sum(s2 * s, axis=1)
    pe = np.cumsum(s, axis=1) - s          # prefix sum, exclusive
    pe2 = np.cumsum(s2, axis=1) - s2
    tail = np.arange(n - 1, -1, -1, dtype=np.float64)
    t1 = np.sum(s2 * (pe + tail * s), axis=1)
    t2 = np.sum(s * (pe2 + tail * s2), axis=1)
    return ((n - 1) * s3 / 6.0 - t1 + 0.5 * t2) / (n * (n - 1))


def _lindley_np(increments: np.ndarray, start: float) -> np.ndarray:
    # Age at segment ends for the zero-clamped walk a_k = max(0, a_{k-1}+d_k),
    # solved in closed form: a_k = C_k - min(min_{j<=k} C_j, -a_0).
    c = np.cumsum(increments)
    return c - np.minimum(np.minimum.accumulate(c), -start)


if HAS_NUMBA:

    @njit(cache=True)
    def _delta_hat_rows_nb(x):
        r, n = x.shape
        out = np.empty(r)
        norm = n * (n - 1)
        for k in range(r):
            s = np.sort(x[k])
            pe = 0.0
            pe2 = 0.0
            s3 = 0.0
            t1 = 0.0
            t2 = 0.0
            for a in range(n):
                v = s[a]
                v2 = v * v
                tail = n - 1 - a
                t1 += v2 * (pe + tail * v)
                t2 += v * (pe2 + tail * v2)
                s3 += v2 * v
                pe += v
                pe2 += v2
            out[k] = ((n - 1) * s3 / 6.0 - t1 + 0.5 * t2) / norm
        return out

    @njit(cache=True)
    def _lindley_nb(increments, start):
        m = increments.shape[0]
        out = np.empty(m)
        a = start
        for k in range(m):
            a = a + increments[k]
            if a < 0.0:
                a = 0.0
            out[k] = a
        return out


def delta_hat_rows(x: np.ndarray) -> np.ndarray:
    """Per-row pairwise statistic for a (replicates, n) matrix of lifetimes."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("expected a 2-d array with at least 2 columns")
    if NUMBA_ENABLED:
        return _delta_hat_rows_nb(x)
    return _delta_hat_rows_np(x)


def lindley_ages(increments: np.ndarray, start: float) -> np.ndarray:
    """Segment-end ages of the zero-clamped piecewise-linear age process."""
    increments = np.ascontiguousarray(increments, dtype=np.float64)
    if NUMBA_ENABLED:
        return _lindley_nb(increments, float(start))
    return _lindley_np(increments, float(start))


def warmup() -> None:
    """Trigger JIT compilation so later calls are not charged for it."""
    delta_hat_rows(np.array([[1.0, 2.0, 3.0]]))
    lindley_ages(np.array([0.5, -1.0, 0.25]), 0.1)
