"""Hot loops: DTW cumulative cost and pairwise Euclidean distances.

Each kernel has a numba implementation and a pure-numpy one. The numba path
is used when numba imports and ``BIOCHAIN_DISABLE_NUMBA`` is unset (or "0").
The two DTW paths accumulate per-channel squared differences in channel
order and so agree bit for bit; pairwise distances agree to rounding.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLED = os.environ.get("BIOCHAIN_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by BIOCHAIN_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def band_width(n: int, m: int, window: int | None) -> int:
    """Sakoe-Chiba half-width, widened so the end cell stays reachable. -1 = no band."""
    if window is None:
        return -1
    return max(int(window), abs(n - m))


# numpy path

def local_cost_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    acc = np.zeros((a.shape[0], b.shape[0]))
    for c in range(a.shape[1]):
        diff = a[:, c][:, None] - b[:, c][None, :]
        acc += diff * diff
    return np.sqrt(acc)


def dtw_cost_numpy(a: np.ndarray, b: np.ndarray, window: int = -1) -> float:
    """Cumulative DTW cost, swept one anti-diagonal at a time."""
    n, m = a.shape[0], b.shape[0]
    cost = local_cost_matrix(a, b)
    if window >= 0:
        i, j = np.indices((n, m))
        cost[np.abs(i - j) > window] = np.inf
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for k in range(2, n + m + 1):
        i = np.arange(max(1, k - m), min(n, k - 1) + 1)
        j = k - i
        best = np.minimum(np.minimum(acc[i - 1, j], acc[i - 1, j - 1]), acc[i, j - 1])
        acc[i, j] = cost[i - 1, j - 1] + best
    return float(acc[n, m])


def pair_distances_numpy(x: np.ndarray, left: np.ndarray, right: np.ndarray, chunk: int = 2048) -> np.ndarray:
    out = np.empty(left.shape[0])
    for s in range(0, left.shape[0], chunk):
        d = x[left[s:s + chunk]] - x[right[s:s + chunk]]
        out[s:s + chunk] = np.sqrt(np.einsum("ij,ij->i", d, d))
    return out


# numba path

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def dtw_cost_numba(a, b, window=-1):
        n = a.shape[0]
        m = b.shape[0]
        channels = a.shape[1]
        prev = np.full(m + 1, np.inf)
        cur = np.full(m + 1, np.inf)
        prev[0] = 0.0
        for i in range(1, n + 1):
            for j in range(m + 1):
                cur[j] = np.inf
            lo = 1
            hi = m
            if window >= 0:
                lo = max(1, i - window)
                hi = min(m, i + window)
            for j in range(lo, hi + 1):
                d = 0.0
                for c in range(channels):
                    diff = a[i - 1, c] - b[j - 1, c]
                    d += diff * diff
                best = prev[j]
                if prev[j - 1] < best:
                    best = prev[j - 1]
                if cur[j - 1] < best:
                    best = cur[j - 1]
                cur[j] = math.sqrt(d) + best
            prev, cur = cur, prev
        return prev[m]

    @njit(cache=True, nogil=True)
    def pair_distances_numba(x, left, right):
        out = np.empty(left.shape[0])
        dim = x.shape[1]
        for p in range(left.shape[0]):
            s = 0.0
            u = left[p]
            v = right[p]
            for k in range(dim):
                diff = x[u, k] - x[v, k]
                s += diff * diff
            out[p] = math.sqrt(s)
        return out

    def dtw_cost(a, b, window=-1):
        return float(dtw_cost_numba(a, b, window))

    pair_distances = pair_distances_numba
else:
    dtw_cost_numba = None
    pair_distances_numba = None
    dtw_cost = dtw_cost_numpy
    pair_distances = pair_distances_numpy
