"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np

_CHUNK = 1 << 20  # target number of (query, point) pairs per block


def mcshane_min(queries, points, values, c, alpha, threads=1):
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    m, n = queries.shape[0], points.shape[0]
    out = np.empty(m, dtype=np.float64)
    step = max(1, _CHUNK // max(n, 1))
    half = 0.5 * alpha
    for start in range(0, m, step):
        q = queries[start:start + step]
        sq = np.zeros((q.shape[0], n))
        for d in range(points.shape[1]):
            diff = q[:, d, None] - points[None, :, d]
            sq += diff * diff
        out[start:start + step] = np.min(values[None, :] + c * np.power(sq, half), axis=1)
    return out


def max_holder_quotient(points, values, alpha):
    points = np.ascontiguousarray(points, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = points.shape[0]
    best = 0.0
    step = max(1, _CHUNK // max(n, 1))
    half = 0.5 * alpha
    for start in range(0, n, step):
        rows = np.arange(start, min(n, start + step))
        sq = np.zeros((rows.size, n))
        for d in range(points.shape[1]):
            diff = points[rows, d, None] - points[None, :, d]
            sq += diff * diff
        dv = np.abs(values[rows, None] - values[None, :])
        upper = np.arange(n)[None, :] > rows[:, None]
        coincident = upper & (sq == 0.0)
        if np.any(dv[coincident] > 0.0):
            return float("inf")
        keep = upper & (sq > 0.0)
        if np.any(keep):
            best = max(best, float(np.max(dv[keep] / np.power(sq[keep], half))))
    return best


def corner_minmax_2d(v):
    v = np.asarray(v, dtype=np.float64)
    lo = np.minimum(np.minimum(v[:-1, :-1], v[1:, :-1]), np.minimum(v[:-1, 1:], v[1:, 1:]))
    hi = np.maximum(np.maximum(v[:-1, :-1], v[1:, :-1]), np.maximum(v[:-1, 1:], v[1:, 1:]))
    return lo, hi
