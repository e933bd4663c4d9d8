# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Must stay numerically interchangeable with _pykernels."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport pow, sqrt, INFINITY, fabs

cnp.import_array()


def mcshane_min(const double[:, ::1] queries, const double[:, ::1] points_in, const double[::1] values_in,
                double c, double alpha, int threads=1):
    """min_j values[j] + c * |queries[i] - points[j]|**alpha for every query row.

    Samples are visited in increasing value, so a query stops as soon as the
    next value alone cannot beat its running minimum.
    """
    order = np.argsort(np.asarray(values_in), kind="stable")
    cdef const double[:, ::1] points = np.ascontiguousarray(np.asarray(points_in)[order])
    cdef const double[::1] values = np.ascontiguousarray(np.asarray(values_in)[order])
    cdef Py_ssize_t m = queries.shape[0], n = points.shape[0], p = points.shape[1]
    cdef Py_ssize_t i, j, d
    cdef double best, acc, diff, term, half = 0.5 * alpha
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    if threads < 1:
        threads = 1
    for i in prange(m, nogil=True, num_threads=threads, schedule="static"):
        best = INFINITY
        for j in range(n):
            if values[j] >= best:
                break
            acc = 0.0
            for d in range(p):
                diff = queries[i, d] - points[j, d]
                acc = acc + diff * diff
            if acc == 0.0:
                term = values[j]
            else:
                term = values[j] + c * pow(acc, half)
            if term < best:
                best = term
        res[i] = best
    return out


def max_holder_quotient(const double[:, ::1] points, const double[::1] values, double alpha):
    """Exhaustive max over pairs of |dv| / |dx|**alpha; coincident points are skipped
    unless their values differ (then +inf)."""
    cdef Py_ssize_t n = points.shape[0], p = points.shape[1]
    cdef Py_ssize_t i, j, d
    cdef double best = 0.0, acc, diff, q, dv, half = 0.5 * alpha
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for d in range(p):
                diff = points[i, d] - points[j, d]
                acc += diff * diff
            dv = fabs(values[i] - values[j])
            if acc == 0.0:
                if dv > 0.0:
                    return INFINITY
                continue
            q = dv / pow(acc, half)
            if q > best:
                best = q
    return best


def corner_minmax_2d(const double[:, ::1] v):
    """Per-cell min and max over the four corner values of a vertex lattice."""
    cdef Py_ssize_t a = v.shape[0] - 1, b = v.shape[1] - 1
    cdef Py_ssize_t i, j
    cdef double x0, x1, x2, x3, lo, hi
    lo_arr = np.empty((a, b), dtype=np.float64)
    hi_arr = np.empty((a, b), dtype=np.float64)
    cdef double[:, ::1] lo_v = lo_arr
    cdef double[:, ::1] hi_v = hi_arr
    for i in range(a):
        for j in range(b):
            x0 = v[i, j]
            x1 = v[i + 1, j]
            x2 = v[i, j + 1]
            x3 = v[i + 1, j + 1]
            lo = x0
            hi = x0
            if x1 < lo: lo = x1
            if x1 > hi: hi = x1
            if x2 < lo: lo = x2
            if x2 > hi: hi = x2
            if x3 < lo: lo = x3
            if x3 > hi: hi = x3
            lo_v[i, j] = lo
            hi_v[i, j] = hi
    return lo_arr, hi_arr
