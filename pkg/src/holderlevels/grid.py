"""Dyadic occupancy grids, cell counting, slicing and box-dimension regression.

A :class:`GridSet` at resolution ``N`` splits its ambient box into ``2**N`` cells
per axis. Cell ``(i0, ..., i_{p-1})`` covers ``[lo_d + i_d*h_d, lo_d + (i_d+1)*h_d]``
along axis ``d``; axis 0 is ``x``. Occupancy is stored row-major as a boolean array
of shape ``(2**N,) * p``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InconsistentInput, InsufficientData, InvalidArgument

GRID_MAGIC = b"HLGRID01"
MAX_DIM = 3


def unit_bounds(p, lo=0.0, hi=1.0):
    return tuple((float(lo), float(hi)) for _ in range(p))


class GridSet:
    """Immutable occupancy set over the ``2**-N`` dyadic grid of an ambient box."""

    __slots__ = ("_cells", "_bounds")

    def __init__(self, cells, bounds=None):
        cells = np.array(cells, dtype=bool, copy=True)
        p = cells.ndim
        if not 1 <= p <= MAX_DIM:
            raise InvalidArgument(f"dimension p={p} outside 1..{MAX_DIM}")
        side = cells.shape[0]
        if any(s != side for s in cells.shape) or side < 1 or side & (side - 1):
            raise InvalidArgument(f"cell array shape {cells.shape} is not (2**N,)*p")
        if bounds is None:
            bounds = unit_bounds(p)
        bounds = tuple((float(a), float(b)) for a, b in bounds)
        if len(bounds) != p or any(not b > a for a, b in bounds):
            raise InvalidArgument(f"bad bounds {bounds} for p={p}")
        cells.setflags(write=False)
        self._cells = cells
        self._bounds = bounds

    @classmethod
    def empty(cls, p, N, bounds=None):
        return cls(np.zeros((1 << N,) * p, dtype=bool), bounds)

    @classmethod
    def full(cls, p, N, bounds=None):
        return cls(np.ones((1 << N,) * p, dtype=bool), bounds)

    @classmethod
    def from_indices(cls, p, N, indices, bounds=None):
        cells = np.zeros((1 << N,) * p, dtype=bool)
        idx = np.asarray(indices, dtype=np.int64).reshape(-1, p)
        if idx.size and (idx.min() < 0 or idx.max() >= (1 << N)):
            raise InvalidArgument("cell index out of range")
        cells[tuple(idx.T)] = True
        return cls(cells, bounds)

    @property
    def cells(self):
        return self._cells

    @property
    def p(self):
        return self._cells.ndim

    @property
    def N(self):
        return int(self._cells.shape[0]).bit_length() - 1

    @property
    def bounds(self):
        return self._bounds

    @property
    def lo(self):
        return np.array([b[0] for b in self._bounds])

    @property
    def hi(self):
        return np.array([b[1] for b in self._bounds])

    @property
    def step(self):
        """Cell edge length along each axis."""
        return (self.hi - self.lo) / (1 << self.N)

    def occupied(self):
        """Indices of occupied cells, shape ``(count, p)``, row-major order."""
        return np.argwhere(self._cells)

    def __eq__(self, other):
        if not isinstance(other, GridSet):
            return NotImplemented
        return (self._bounds == other._bounds and self._cells.shape == other._cells.shape
                and bool(np.array_equal(self._cells, other._cells)))

    def __hash__(self):
        return hash((self._bounds, self._cells.shape, self._cells.tobytes()))

    def __repr__(self):
        return f"GridSet(p={self.p}, N={self.N}, count={cell_count(self)}, bounds={self._bounds})"


def cell_count(g: GridSet) -> int:
    """Number of occupied cells, the ``a_N`` of the box-counting definition."""
    return int(np.count_nonzero(g.cells))


def coarsen(g: GridSet, dN: int) -> GridSet:
    """Merge ``2**dN`` cells per axis; a coarse cell is occupied iff any child is."""
    dN = int(dN)
    if dN < 0 or dN > g.N:
        raise InvalidArgument(f"cannot coarsen N={g.N} by {dN}")
    if dN == 0:
        return g
    return GridSet(coarsen_array(g.cells, dN), g.bounds)


def coarsen_array(cells, dN):
    p = cells.ndim
    n = cells.shape[0] >> dN
    blocks = cells.reshape(sum(((n, 1 << dN) for _ in range(p)), ()))
    return blocks.any(axis=tuple(range(1, 2 * p, 2)))


def multiscale_counts(g: GridSet, scales):
    """``[(N, a_N)]`` for each requested scale, all derived from ``g`` by coarsening."""
    out = []
    for n in sorted(set(int(s) for s in scales)):
        if n > g.N or n < 0:
            raise InvalidArgument(f"scale {n} not available from resolution {g.N}")
        out.append((n, cell_count(coarsen(g, g.N - n))))
    return out


@dataclass(frozen=True)
class DimEstimate:
    """Per-scale counts and their least-squares log2 slope."""

    scales: tuple
    counts: tuple
    slope: float
    residual: float
    local_slopes: tuple = field(default=())

    @property
    def empty(self):
        return all(c == 0 for c in self.counts)

    def to_json(self):
        return json.dumps({"scales": list(self.scales), "counts": list(self.counts),
                           "slope": self.slope, "residual": self.residual}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        est = box_dimension(list(zip(d["scales"], d["counts"])))
        return cls(est.scales, est.counts, float(d["slope"]), float(d["residual"]), est.local_slopes)


def box_dimension(counts) -> DimEstimate:
    """Least-squares slope of ``log2 a_N`` against ``N``.

    All-zero counts describe the empty set, whose box dimension is 0 by
    convention. A zero count next to nonzero ones is rejected.
    """
    pairs = sorted((int(n), int(a)) for n, a in counts)
    if len(pairs) < 3:
        raise InsufficientData(f"need at least 3 scales, got {len(pairs)}")
    scales = tuple(n for n, _ in pairs)
    if len(set(scales)) != len(scales):
        raise InvalidArgument(f"repeated scales in {scales}")
    values = tuple(a for _, a in pairs)
    if any(a < 0 for a in values):
        raise InconsistentInput("negative cell count")
    if all(a == 0 for a in values):
        return DimEstimate(scales, values, 0.0, 0.0, tuple(0.0 for _ in scales[1:]))
    if any(a == 0 for a in values):
        raise InconsistentInput(f"zero count among nonempty scales: {dict(pairs)}")
    x = np.array(scales, dtype=float)
    y = np.log2(np.array(values, dtype=float))
    xm = x - x.mean()
    slope = float(np.dot(xm, y - y.mean()) / np.dot(xm, xm))
    intercept = float(y.mean() - slope * x.mean())
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    local = tuple(float(v) for v in np.diff(y) / np.diff(x))
    return DimEstimate(scales, values, slope, residual, local)


def estimate_dimension(g: GridSet, scales) -> DimEstimate:
    return box_dimension(multiscale_counts(g, scales))


def slice(g: GridSet, axis: int, t: int) -> GridSet:  # noqa: A001 - mirrors the operation name
    """The ``(p-1)``-dimensional section of ``g`` at cell row ``t`` along ``axis``."""
    if g.p < 2:
        raise InvalidArgument("slicing needs p >= 2")
    if not 0 <= axis < g.p:
        raise InvalidArgument(f"axis {axis} out of range for p={g.p}")
    if not 0 <= t < (1 << g.N):
        raise InvalidArgument(f"slice index {t} out of range for N={g.N}")
    bounds = tuple(b for d, b in enumerate(g.bounds) if d != axis)
    return GridSet(np.take(g.cells, t, axis=axis), bounds)


def slice_counts(g: GridSet, axis: int):
    """Occupied-cell count of every slice along ``axis``."""
    others = tuple(d for d in range(g.p) if d != axis)
    return np.count_nonzero(g.cells, axis=others)


def slice_audit(g: GridSet, axis: int, eps: float, s: float):
    """Fraction of slices with more than ``2**((s-1+2*eps)*N)`` cells, and ``2**(-eps*N)``.

    ``s`` is clamped below at 1, the way the dimension bound is set up.
    """
    if not 0 <= axis < g.p:
        raise InvalidArgument(f"axis {axis} out of range for p={g.p}")
    s = max(1.0, float(s))
    N = g.N
    threshold = 2.0 ** ((s - 1.0 + 2.0 * eps) * N)
    counts = slice_counts(g, axis)
    fraction = float(np.count_nonzero(counts > threshold)) / (1 << N)
    return fraction, 2.0 ** (-eps * N)


def write_grid(g: GridSet, path):
    """HLGRID01: magic, p (u8), N (u8), per-axis (lo, hi) as f64 LE, packed bits."""
    header = GRID_MAGIC + struct.pack("<BB", g.p, g.N)
    header += struct.pack("<" + "d" * (2 * g.p), *[v for b in g.bounds for v in b])
    bits = np.packbits(g.cells.reshape(-1), bitorder="little")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(bits.tobytes())


def read_grid(path) -> GridSet:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != GRID_MAGIC:
        raise FormatError(f"{path}: not an HLGRID01 file")
    p, N = struct.unpack_from("<BB", data, 8)
    if not 1 <= p <= MAX_DIM or N > 30:
        raise FormatError(f"{path}: bad header p={p} N={N}")
    off = 10
    flat = struct.unpack_from("<" + "d" * (2 * p), data, off)
    off += 16 * p
    bounds = tuple((flat[2 * d], flat[2 * d + 1]) for d in range(p))
    total = 1 << (p * N)
    nbytes = (total + 7) // 8
    if len(data) - off != nbytes:
        raise FormatError(f"{path}: expected {nbytes} payload bytes, found {len(data) - off}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8, offset=off), bitorder="little")[:total]
    return GridSet(bits.astype(bool).reshape((1 << N,) * p), bounds)
