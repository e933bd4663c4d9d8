"""Level-set cell counting, per-level box dimensions, and range-measure summaries.

A cell of the mask meets the level ``r`` when ``r`` lies between the smallest and
largest of its corner values. Counts at coarser scales come from merging the
fine straddling cells, so a coarse cell is counted exactly when one of its
children meets the level.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyRange, InvalidArgument
from .grid import DimEstimate, GridSet, box_dimension
from .holder.functions import GridFunction

_BLOCK_PAIRS = 1 << 23
# offset of the level grid inside each spacing; irrational so levels avoid dyadic cell boundaries
LEVEL_OFFSET = (5 ** 0.5 - 1) / 2


def _aligned_values(f: GridFunction, mask: GridSet):
    if f.p != mask.p:
        raise InvalidArgument(f"function dimension {f.p} differs from mask dimension {mask.p}")
    if not np.allclose(np.array(f.bounds), np.array(mask.bounds)):
        raise InvalidArgument("function and mask live on different boxes")
    if f.N < mask.N:
        raise InvalidArgument(f"function resolution {f.N} is coarser than mask resolution {mask.N}")
    stride = 1 << (f.N - mask.N)
    return f.values[tuple(slice(None, None, stride) for _ in range(f.p))]


def corner_range(values):
    """Per-cell minimum and maximum over the ``2**p`` corners of a vertex array."""
    if values.ndim == 2:
        return kernels.corner_minmax_2d(values)
    p = values.ndim
    lo = hi = None
    for corner in np.ndindex(*(2,) * p):
        sl = tuple(slice(c, c + values.shape[d] - 1) for d, c in enumerate(corner))
        v = values[sl]
        lo = v if lo is None else np.minimum(lo, v)
        hi = v if hi is None else np.maximum(hi, v)
    return np.array(lo), np.array(hi)


def _cell_ranges(f, mask, slack):
    vals = _aligned_values(f, mask)
    lo, hi = corner_range(vals)
    if slack:
        diam = float(np.sqrt(np.sum(mask.step ** 2)))
        w = f.c * diam ** f.alpha
        lo, hi = lo - w, hi + w
    return lo, hi


def _scales_ok(scales, N):
    scales = sorted(set(int(s) for s in scales))
    if not scales or scales[0] < 0 or scales[-1] > N:
        raise InvalidArgument(f"scales {scales} not within 0..{N}")
    return scales


def _straddle_counts(lo, hi, occ, levels, scales):
    """``counts[i, j]``: coarse cells at ``scales[j]`` meeting ``levels[i]``."""
    N = occ.shape[0].bit_length() - 1
    p = occ.ndim
    counts = np.zeros((len(levels), len(scales)), dtype=np.int64)
    rows = occ.shape[0]
    # blocks of whole coarse rows at the coarsest scale keep coarse cells inside one block
    unit = 1 << (N - scales[0])
    cells_per_row = occ[0].size
    block_rows = max(unit, (max(1, _BLOCK_PAIRS // max(1, cells_per_row)) // unit) * unit)
    for r0 in range(0, rows, block_rows):
        r1 = min(rows, r0 + block_rows)
        sub = occ[r0:r1]
        flat = np.flatnonzero(sub)
        if flat.size == 0:
            continue
        cmin = lo[r0:r1].reshape(-1)[flat]
        cmax = hi[r0:r1].reshape(-1)[flat]
        first = np.searchsorted(levels, cmin, side="left")
        last = np.searchsorted(levels, cmax, side="right") - 1
        reps = np.maximum(last - first + 1, 0)
        total = int(reps.sum())
        if total == 0:
            continue
        cell_of = np.repeat(np.arange(flat.size), reps)
        level_of = np.repeat(first, reps) + (np.arange(total) - np.repeat(np.cumsum(reps) - reps, reps))
        idx = np.array(np.unravel_index(flat, sub.shape))
        idx[0] += r0
        for j, n in enumerate(scales):
            shift = N - n
            side = 1 << n
            coarse = np.zeros(flat.size, dtype=np.int64)
            for d in range(p):
                coarse = coarse * side + (idx[d] >> shift)
            keys = level_of.astype(np.int64) * (side ** p) + coarse[cell_of]
            uniq = np.unique(keys)
            counts[:, j] += np.bincount(uniq // (side ** p), minlength=len(levels))
    return counts


def level_cells(f: GridFunction, mask: GridSet, r: float, N: int | None = None, slack: bool = False) -> int:
    """Number of resolution-``N`` cells of the mask that meet ``f = r``."""
    N = mask.N if N is None else int(N)
    scales = _scales_ok([N], mask.N)
    lo, hi = _cell_ranges(f, mask, slack)
    return int(_straddle_counts(lo, hi, mask.cells, np.array([float(r)]), scales)[0, 0])


def level_dim(f: GridFunction, mask: GridSet, r: float, scales, slack: bool = False) -> DimEstimate:
    """Box-dimension fit of the level set ``f = r``; an empty level gives an all-zero estimate."""
    scales = _scales_ok(scales, mask.N)
    lo, hi = _cell_ranges(f, mask, slack)
    counts = _straddle_counts(lo, hi, mask.cells, np.array([float(r)]), scales)[0]
    return box_dimension(list(zip(scales, counts.tolist())))


@dataclass(frozen=True)
class LevelProfile:
    """Per-level counts and slopes over a uniform grid of values, one level per spacing.

    ``slopes`` is NaN on empty levels. ``range_measure`` is the number of
    nonempty levels times the level spacing.
    """

    levels: np.ndarray
    scales: tuple
    counts: np.ndarray
    slopes: np.ndarray
    residuals: np.ndarray
    spacing: float
    range_measure: float

    @property
    def empty(self):
        return np.all(self.counts == 0, axis=1)

    @property
    def level_count(self):
        return len(self.levels)

    def nonempty_slopes(self):
        return self.slopes[~self.empty]

    def dims(self):
        return [None if e else DimEstimate(self.scales, tuple(int(c) for c in row), float(s), float(res))
                for e, row, s, res in zip(self.empty, self.counts, self.slopes, self.residuals)]


def profile_from_counts(levels, scales, counts, spacing) -> LevelProfile:
    levels = np.asarray(levels, dtype=float)
    counts = np.asarray(counts, dtype=np.int64)
    slopes = np.full(len(levels), np.nan)
    residuals = np.full(len(levels), np.nan)
    for i, row in enumerate(counts):
        if np.any(row):
            est = box_dimension(list(zip(scales, row.tolist())))
            slopes[i], residuals[i] = est.slope, est.residual
    nonempty = int(np.count_nonzero(np.any(counts > 0, axis=1)))
    return LevelProfile(levels, tuple(scales), counts, slopes, residuals, float(spacing), nonempty * float(spacing))


def level_sweep(f: GridFunction, mask: GridSet, level_count: int, scales, slack: bool = False) -> LevelProfile:
    """Counts and slopes at ``level_count`` evenly spaced values spanning ``f`` on the mask.

    Level ``i`` sits at ``min + (i + LEVEL_OFFSET) * spacing``; the irrational offset
    keeps levels off the dyadic lattice lines, where closed cells on both sides
    would each count.
    """
    if level_count < 16:
        raise InvalidArgument(f"level_count must be at least 16, got {level_count}")
    scales = _scales_ok(scales, mask.N)
    if len(scales) < 3:
        raise InvalidArgument("need at least 3 scales")
    lo, hi = _cell_ranges(f, mask, slack)
    occ = mask.cells
    if not occ.any():
        return profile_from_counts(np.zeros(0), scales, np.zeros((0, len(scales))), 0.0)
    vmin, vmax = float(lo[occ].min()), float(hi[occ].max())
    if vmax == vmin:
        levels = np.array([vmin])
        spacing = 0.0
    else:
        spacing = (vmax - vmin) / level_count
        levels = vmin + (np.arange(level_count) + LEVEL_OFFSET) * spacing
    counts = _straddle_counts(lo, hi, occ, levels, scales)
    return profile_from_counts(levels, scales, counts, spacing)


def dstar_estimate(profile: LevelProfile, quantile_resolution: float | None = None) -> float:
    """Essential-supremum proxy: the slope left after discarding the top ``m`` nonempty levels.

    ``m = max(1, round(quantile_resolution * level_count))`` with the default
    resolution ``1 / level_count``, so a lone outlier level never sets the result.
    Returns 0 when no more than ``m`` levels are nonempty.
    """
    s = profile.nonempty_slopes()
    if s.size == 0:
        raise EmptyRange("every level of the profile is empty")
    count = profile.level_count
    q = 1.0 / count if quantile_resolution is None else float(quantile_resolution)
    m = max(1, int(round(q * count)))
    if s.size <= m:
        return 0.0
    return float(np.sort(s)[::-1][m])


def kappa(profile: LevelProfile, D: float, delta: float, window=None) -> float:
    """Share of nonempty levels (within ``window = (lo, hi)`` if given) whose slope exceeds ``D - delta``."""
    mask = ~profile.empty
    if window is not None:
        wins = [window] if np.ndim(window[0]) == 0 else list(window)
        inside = np.zeros(len(profile.levels), dtype=bool)
        for a, b in wins:
            inside |= (profile.levels >= a) & (profile.levels <= b)
        mask &= inside
    if profile.range_measure <= 0 or not mask.any():
        raise EmptyRange("no nonempty levels to measure")
    return float(np.count_nonzero(profile.slopes[mask] > D - delta)) / float(np.count_nonzero(mask))


def fubini_area(f: GridFunction, mask: GridSet, N: int | None = None) -> float:
    """Area of the rasterized set ``{(x, f(x, y)) : (x, y) in mask}``.

    Columns follow the mask's x-cells (merged to resolution ``N``); value bins have
    the column width as height and sit at integer multiples of it.
    """
    if mask.p != 2 or f.p != 2:
        raise InvalidArgument("fubini_area needs p = 2")
    N = mask.N if N is None else int(N)
    if not 0 <= N <= mask.N:
        raise InvalidArgument(f"N={N} not within 0..{mask.N}")
    lo, hi = _cell_ranges(f, mask, False)
    w = (mask.hi[0] - mask.lo[0]) / (1 << N)
    h = w
    ii, jj = np.nonzero(mask.cells)
    if ii.size == 0:
        return 0.0
    col = ii >> (mask.N - N)
    a = lo[ii, jj] / h
    b = hi[ii, jj] / h
    ra, rb = np.rint(a), np.rint(b)
    a = np.where(np.abs(a - ra) < 1e-9, ra, a)
    b = np.where(np.abs(b - rb) < 1e-9, rb, b)
    first = np.floor(a).astype(np.int64)
    last = np.where(b > a, np.ceil(b).astype(np.int64) - 1, first)
    last = np.maximum(last, first)
    reps = last - first + 1
    base = int(first.min())
    span = int(last.max()) - base + 1
    chunk = 1 << 22
    seen = []
    starts = np.concatenate([[0], np.cumsum(reps)])
    i = 0
    while i < len(reps):
        j = int(np.searchsorted(starts, starts[i] + chunk, side="right")) - 1
        j = max(j, i + 1)
        r = reps[i:j]
        offs = np.arange(int(r.sum())) - np.repeat(np.cumsum(r) - r, r)
        keys = np.repeat(col[i:j].astype(np.int64) * span, r) + np.repeat(first[i:j] - base, r) + offs
        seen.append(np.unique(keys))
        i = j
    total = np.unique(np.concatenate(seen)).size
    return float(total) * w * h


def profile_csv_text(profile: LevelProfile) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["r"] + [f"a_{n}" for n in profile.scales] + ["slope", "residual", "empty_flag"])
    for r, row, s, res, e in zip(profile.levels, profile.counts, profile.slopes, profile.residuals,
                                 profile.empty):
        out.writerow([repr(float(r))] + [str(int(c)) for c in row]
                     + ["" if e else repr(float(s)), "" if e else repr(float(res)), int(bool(e))])
    return buf.getvalue()


def write_profile_csv(profile: LevelProfile, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(profile_csv_text(profile))


def read_profile_csv(path) -> LevelProfile:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    scales = tuple(int(h[2:]) for h in head if h.startswith("a_"))
    levels = np.array([float(r[0]) for r in rows[1:]])
    counts = np.array([[int(v) for v in r[1:1 + len(scales)]] for r in rows[1:]], dtype=np.int64)
    spacing = float(levels[1] - levels[0]) if len(levels) > 1 else 0.0
    return profile_from_counts(levels, scales, counts.reshape(len(levels), len(scales)), spacing)


def measured_dimension(mask: GridSet, scales) -> float:
    """Box-dimension slope of the mask itself (0 for the empty set)."""
    from .grid import estimate_dimension
    return estimate_dimension(mask, scales).slope


__all__ = [
    "LevelProfile", "corner_range", "dstar_estimate", "fubini_area", "kappa", "level_cells", "level_dim",
    "level_sweep", "measured_dimension", "profile_csv_text", "profile_from_counts", "read_profile_csv",
    "write_profile_csv",
]
