# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simplex pivot loop; same contract as _kernels_py."""
import numpy as np
cimport numpy as cnp

cdef int OPTIMAL = 0
cdef int UNBOUNDED = 1
cdef int ITERATION_LIMIT = 2


cdef void _pivot(double[:, ::1] T, long[::1] basis, Py_ssize_t r, Py_ssize_t q) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nr = T.shape[0]
    cdef Py_ssize_t nc = T.shape[1]
    cdef double p = T[r, q]
    cdef double f
    for j in range(nc):
        T[r, j] /= p
    for i in range(nr):
        if i == r:
            continue
        f = T[i, q]
        if f != 0.0:
            for j in range(nc):
                T[i, j] -= f * T[r, j]
    basis[r] = q


def pivot(double[:, ::1] T, long[::1] basis, Py_ssize_t r, Py_ssize_t q):
    _pivot(T, basis, r, q)


cdef int _loop(double[:, ::1] T, long[::1] basis, Py_ssize_t n_enter, double tol,
               long max_iter, long* count) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t rhs = T.shape[1] - 1
    cdef Py_ssize_t i, j, q, best
    cdef double ratio, best_ratio
    while count[0] < max_iter:
        q = -1
        for j in range(n_enter):
            if T[m, j] < -tol:
                q = j
                break
        if q < 0:
            return OPTIMAL
        best = -1
        best_ratio = 0.0
        for i in range(m):
            if T[i, q] > tol:
                ratio = T[i, rhs] / T[i, q]
                if best < 0 or ratio < best_ratio - tol:
                    best = i
                    best_ratio = ratio
                elif ratio <= best_ratio + tol and basis[i] < basis[best]:
                    best = i
        if best < 0:
            return UNBOUNDED
        _pivot(T, basis, best, q)
        count[0] += 1
    return ITERATION_LIMIT


def simplex_loop(double[:, ::1] T, long[::1] basis, Py_ssize_t n_enter, double tol,
                 long max_iter):
    cdef long it = 0
    cdef int status
    with nogil:
        status = _loop(T, basis, n_enter, tol, max_iter, &it)
    return status, it


cdef void _window(const double[::1] a, const long[::1] lo, const long[::1] hi,
                  long[::1] out, long[::1] dq, int sgn) noexcept nogil:
    # monotone deque over windows whose ends never move left
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t q = lo.shape[0]
    cdef Py_ssize_t head = 0, tail = 0, nxt = 0, i
    for i in range(q):
        if lo[i] > hi[i]:
            out[i] = -1
            continue
        while nxt <= hi[i] and nxt < n:
            while tail > head and sgn * a[dq[tail - 1]] > sgn * a[nxt]:
                tail -= 1
            dq[tail] = nxt
            tail += 1
            nxt += 1
        while tail > head and dq[head] < lo[i]:
            head += 1
        out[i] = dq[head] if tail > head else -1


def _run_window(a, lo, hi, int sgn):
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef long[::1] lv = np.ascontiguousarray(lo, dtype=np.int64)
    cdef long[::1] hv = np.ascontiguousarray(hi, dtype=np.int64)
    out = np.empty(lv.shape[0], dtype=np.int64)
    dq = np.empty(max(av.shape[0], 1), dtype=np.int64)
    cdef long[::1] ov = out
    cdef long[::1] dv = dq
    if lv.shape[0] and np.any(np.diff(lv) < 0) or hv.shape[0] and np.any(np.diff(hv) < 0):
        raise ValueError("window ends must be nondecreasing")
    with nogil:
        _window(av, lv, hv, ov, dv, sgn)
    return out


def window_argmin(a, lo, hi):
    return _run_window(a, lo, hi, 1)


def window_argmax(a, lo, hi):
    return _run_window(a, lo, hi, -1)
