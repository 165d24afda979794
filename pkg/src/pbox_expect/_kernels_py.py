"""Pure-Python simplex pivot loop (fallback when the compiled kernel is absent)."""
from __future__ import annotations

import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def simplex_loop(T: np.ndarray, basis: np.ndarray, n_enter: int, tol: float,
                 max_iter: int) -> tuple[int, int]:
    """Run Bland-rule pivots on tableau ``T`` in place.

    Rows ``0..m-1`` are constraints with the right-hand side in the last
    column; row ``m`` holds reduced costs (minimization). Only columns
    ``< n_enter`` may enter the basis.
    """
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    it = 0
    while it < max_iter:
        costs = T[m, :n_enter]
        cand = np.nonzero(costs < -tol)[0]
        if cand.size == 0:
            return OPTIMAL, it
        q = int(cand[0])
        col = T[:m, q]
        best = -1
        best_ratio = 0.0
        for i in np.nonzero(col > tol)[0]:
            ratio = T[i, rhs] / col[i]
            if best < 0 or ratio < best_ratio - tol:
                best, best_ratio = int(i), ratio
            elif ratio <= best_ratio + tol and basis[i] < basis[best]:
                best = int(i)
        if best < 0:
            return UNBOUNDED, it
        pivot(T, basis, best, q)
        it += 1
    return ITERATION_LIMIT, it


def pivot(T: np.ndarray, basis: np.ndarray, r: int, q: int) -> None:
    T[r] /= T[r, q]
    col = T[:, q].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = q


def _sparse_table(a: np.ndarray, better) -> list:
    """Index tables: level j holds the best index of each window of length 2^j."""
    idx = np.arange(a.size)
    table = [idx]
    span = 1
    while 2 * span <= a.size:
        prev = table[-1]
        left, right = prev[:-span], prev[span:]
        table.append(np.where(better(a[right], a[left]), right, left))
        span *= 2
    return table


def _window_best(a: np.ndarray, lo: np.ndarray, hi: np.ndarray, better) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    out = np.full(lo.size, -1, dtype=np.int64)
    ok = lo <= hi
    if not ok.any() or a.size == 0:
        return out
    table = _sparse_table(a, better)
    length = hi[ok] - lo[ok] + 1
    j = np.floor(np.log2(length)).astype(np.int64)
    # guard the float log at exact powers of two
    j = np.where((1 << (j + 1)) <= length, j + 1, j)
    j = np.where((1 << j) > length, j - 1, j)
    res = np.empty(length.size, dtype=np.int64)
    for level in np.unique(j):
        sel = j == level
        t = table[level]
        left = t[lo[ok][sel]]
        right = t[hi[ok][sel] - (1 << level) + 1]
        res[sel] = np.where(better(a[right], a[left]), right, left)
    out[ok] = res
    return out


def window_argmin(a, lo, hi) -> np.ndarray:
    """Smallest index of the minimum of a[lo_i..hi_i]; -1 for empty windows."""
    return _window_best(a, lo, hi, np.less)


def window_argmax(a, lo, hi) -> np.ndarray:
    """Smallest index of the maximum of a[lo_i..hi_i]; -1 for empty windows."""
    return _window_best(a, lo, hi, np.greater)
