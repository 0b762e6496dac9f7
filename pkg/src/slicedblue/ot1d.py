"""Exact balanced 1D optimal assignment on the line and on the circle.

Both measures are uniform with the same atom count. On the line the optimal
plan is rank-to-rank after sorting. On the circle the optimal plan is a
cyclic shift of the sorted matching: for p=1 the shift comes from the
weighted-median level of the cdf difference (O(n log n)); for p=2 all n
shifts are enumerated (exact, O(n^2), jitted).
"""

from __future__ import annotations

import numpy as np
from numba import njit

SHIFT_TIE_TOL = 1e-12


def circle_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Geodesic distance on the unit-perimeter circle."""
    delta = np.abs(np.asarray(a, float) - np.asarray(b, float))
    return np.minimum(delta, 1.0 - delta)


def _check_pair(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    src = np.asarray(src, dtype=float).ravel()
    dst = np.asarray(dst, dtype=float).ravel()
    if src.shape[0] != dst.shape[0]:
        raise ValueError(f"length mismatch: {src.shape[0]} vs {dst.shape[0]}")
    if src.shape[0] == 0:
        raise ValueError("empty input")
    return src, dst


def solve_line(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Optimal assignment on the real line: i-th smallest src to i-th smallest dst.

    Returns perm with perm[i] the dst index matched to src[i]. Stable sorts
    keep ties deterministic. The matching minimizes sum |src_i - dst_perm(i)|^p
    for every p >= 1.
    """
    src, dst = _check_pair(src, dst)
    src_order = np.argsort(src, kind="stable")
    dst_order = np.argsort(dst, kind="stable")
    perm = np.empty(src.shape[0], dtype=np.int64)
    perm[src_order] = dst_order
    return perm


@njit(cache=True)
def _circle_shift_costs(s: np.ndarray, d: np.ndarray, p: int) -> np.ndarray:
    n = s.shape[0]
    costs = np.empty(n)
    for k in range(n):
        acc = 0.0
        for i in range(n):
            j = i + k
            if j >= n:
                j -= n
            delta = abs(d[j] - s[i])
            if delta > 0.5:
                delta = 1.0 - delta
            if p == 2:
                delta = delta * delta
            acc += delta
        costs[k] = acc
    return costs


def _median_cut_shift(s_sorted: np.ndarray, d_sorted: np.ndarray) -> int:
    """p=1 optimal cyclic shift via the weighted median of F_src - F_dst.

    The cdf difference is a step function on the circle; its L1-optimal level
    is a weighted median of the step values (weights = level-set lengths) and
    equals k/n for the optimal shift k.
    """
    n = s_sorted.shape[0]
    values = np.concatenate([s_sorted, d_sorted])
    signs = np.concatenate([np.full(n, 1.0 / n), np.full(n, -1.0 / n)])
    order = np.argsort(values, kind="stable")
    values = values[order]
    levels = np.cumsum(signs[order])
    # Segment i carries level levels[i] on [values[i], values[i+1]); the wrap
    # segment [values[-1], values[0]+1) carries the closing level (= 0).
    weights = np.empty(2 * n)
    weights[:-1] = np.diff(values)
    weights[-1] = 1.0 - values[-1] + values[0]
    order = np.argsort(levels, kind="stable")
    lv = levels[order]
    cw = np.cumsum(weights[order])
    idx = int(np.searchsorted(cw, 0.5, side="left"))
    alpha = lv[min(idx, 2 * n - 1)]
    # Level alpha = m/n flattens F_src - F_dst - alpha: src rank i matches dst
    # rank i - m, i.e. a cyclic shift by -m.
    return int(np.round(-alpha * n)) % n


def shifted_assignment(src: np.ndarray, dst: np.ndarray, k: int) -> np.ndarray:
    """Assignment matching i-th smallest src to (i+k mod n)-th smallest dst."""
    src, dst = _check_pair(src, dst)
    n = src.shape[0]
    src_order = np.argsort(src, kind="stable")
    dst_order = np.argsort(dst, kind="stable")
    perm = np.empty(n, dtype=np.int64)
    perm[src_order] = dst_order[(np.arange(n) + k) % n]
    return perm


def solve_circle(src: np.ndarray, dst: np.ndarray, p: int = 2) -> np.ndarray:
    """Optimal assignment on the unit circle for coordinates in [0,1).

    For p=1 the weighted-median cut gives the optimal shift directly. For p=2
    every cyclic shift is scored with the circular ground cost and the best is
    returned; when the p=1 shift ties the minimum within 1e-12 it is preferred
    (deterministic fast path).
    """
    src, dst = _check_pair(src, dst)
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if np.any((src < 0.0) | (src >= 1.0)) or np.any((dst < 0.0) | (dst >= 1.0)):
        raise ValueError("circle coordinates must lie in [0,1)")
    s_sorted = np.sort(src, kind="stable")
    d_sorted = np.sort(dst, kind="stable")
    k1 = _median_cut_shift(s_sorted, d_sorted)
    if p == 1:
        return shifted_assignment(src, dst, k1)
    costs = _circle_shift_costs(s_sorted, d_sorted, 2)
    k = int(np.argmin(costs))
    if costs[k1] <= costs[k] + SHIFT_TIE_TOL:
        k = k1
    return shifted_assignment(src, dst, k)


def assignment_cost_line(src: np.ndarray, dst: np.ndarray, perm: np.ndarray, p: int) -> float:
    return float(np.sum(np.abs(src - dst[perm]) ** p))


def assignment_cost_circle(src: np.ndarray, dst: np.ndarray, perm: np.ndarray, p: int) -> float:
    return float(np.sum(circle_dist(src, dst[perm]) ** p))
