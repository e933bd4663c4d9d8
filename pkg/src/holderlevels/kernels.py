"""Kernel dispatch: the compiled extension when it imports, numpy otherwise.

Set ``HLL_PURE_PYTHON=1`` to force the numpy path (used by the benchmark and the
backend-equivalence tests).
"""

import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("HLL_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python kernels requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

_threads = None


def set_threads(n):
    """Cap worker threads used by compiled kernels (``None`` = HLL_THREADS or 1)."""
    global _threads
    _threads = None if n is None else max(1, int(n))


def threads():
    if _threads is not None:
        return _threads
    try:
        return max(1, int(os.environ.get("HLL_THREADS", "1")))
    except ValueError:
        return 1


def mcshane_min(queries, points, values, c, alpha):
    return _impl.mcshane_min(_c2(queries), _c2(points), _c1(values), float(c), float(alpha), threads())


def max_holder_quotient(points, values, alpha):
    return float(_impl.max_holder_quotient(_c2(points), _c1(values), float(alpha)))


def corner_minmax_2d(v):
    return _impl.corner_minmax_2d(_c2(v))


def _c1(a):
    return np.ascontiguousarray(a, dtype=np.float64).reshape(-1)


def _c2(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    return a.reshape(a.shape[0], -1) if a.ndim != 2 else a
