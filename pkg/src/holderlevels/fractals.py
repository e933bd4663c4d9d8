"""Membership oracles and rasterizers for the dyadic sponge and self-similar IFS attractors.

The sponge is ``F0 x F0`` with ``F0 = [0, 1/2]`` minus the open gaps
``(j 2**-k**2, j 2**-k**2 + 2**-k**3)`` for ``k >= 2``. All gap endpoints are dyadic,
so membership and rasterization run on exact integers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgument, InvalidIFS
from .grid import GridSet

SPONGE_BOUNDS = ((0.0, 0.5), (0.0, 0.5))
_SNAP = 1e-9
_MAX_IMAGES = 1 << 22


# ---------------------------------------------------------------------------
# sponge

@dataclass(frozen=True)
class SpongeSpec:
    """Truncation of the gap union at generation ``k_max``; ``alpha`` is carried for reports."""

    k_max: int = 6
    alpha: float = 1.0

    def __post_init__(self):
        if int(self.k_max) != self.k_max or self.k_max < 2:
            raise InvalidArgument(f"k_max must be an integer >= 2, got {self.k_max}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidArgument(f"alpha must lie in [0, 1], got {self.alpha}")


def sufficient_kmax(N: int) -> int:
    """Smallest truncation that reproduces the exact occupancy at resolution N."""
    return max(2, math.ceil((N + 1) ** (1.0 / 3.0) - 1e-12))


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InvalidArgument(f"non-finite coordinate {x}")
        return Fraction(x)
    return Fraction(x)


def sponge_membership(x, spec: SpongeSpec) -> bool:
    """Exact test of ``x`` in ``F0`` with gap generations ``2..spec.k_max``."""
    xf = _as_fraction(x)
    if xf < 0 or xf > Fraction(1, 2):
        raise InvalidArgument(f"x={x} outside [0, 1/2]")
    for k in range(2, spec.k_max + 1):
        scaled = xf * (1 << (k * k))
        rem = scaled - math.floor(scaled)
        # x - j*2**-k^2 = rem * 2**-k^2 lies in (0, 2**-k^3)  <=>  0 < rem < 2**(k^2-k^3)
        if 0 < rem < Fraction(1, 1 << (k ** 3 - k * k)):
            return False
    return True


def sponge_occupancy_1d(N: int, k_max: int | None = None):
    """Closed-cell occupancy of ``F0`` on ``2**N`` cells of width ``2**-(N+1)``.

    A generation whose gap is at most one cell wide never swallows a closed cell,
    and gap endpoints always survive, so only generations with ``k**3 < N+1``
    can remove cells.
    """
    if N < 0:
        raise InvalidArgument(f"N must be >= 0, got {N}")
    M = 1 << N
    delta = np.zeros(M + 1, dtype=np.int64)
    k = 2
    while k ** 3 < N + 1 and (k_max is None or k <= k_max):
        spacing = 1 << (N + 1 - k * k)
        width = 1 << (N + 1 - k ** 3)
        starts = np.arange(0, M, spacing, dtype=np.int64)
        first = starts + 1
        last = np.minimum(starts + width - 2, M - 1)
        ok = last >= first
        np.add.at(delta, first[ok], 1)
        np.add.at(delta, last[ok] + 1, -1)
        k += 1
    return np.cumsum(delta[:M]) == 0


def rasterize_sponge(spec: SpongeSpec, N: int) -> GridSet:
    """``F = F0 x F0`` on the ``2**N`` grid of ``[0, 1/2]**2`` (closed cells)."""
    if N < 1:
        raise InvalidArgument(f"N must be >= 1, got {N}")
    occ = sponge_occupancy_1d(N, spec.k_max)
    return GridSet(np.logical_and.outer(occ, occ), SPONGE_BOUNDS)


def sponge_interval_measure(a, b, k_exact: int = 4):
    """Rigorous ``(lower, upper)`` bounds on ``lambda([a, b] & F0)`` for ``0 <= a <= b <= 1/2``.

    Generations up to ``k_exact`` are subtracted exactly (with overlap merging);
    deeper generations are bounded by their gap count times gap width.
    """
    a, b = _as_fraction(a), _as_fraction(b)
    if not 0 <= a <= b <= Fraction(1, 2):
        raise InvalidArgument(f"[{a}, {b}] not inside [0, 1/2]")
    gaps = []
    for k in range(2, k_exact + 1):
        s = Fraction(1, 1 << (k * k))
        w = Fraction(1, 1 << (k ** 3))
        j0 = math.floor((a - w) / s)
        j1 = math.floor(b / s)
        for j in range(max(j0, 0), j1 + 1):
            lo, hi = max(j * s, a), min(j * s + w, b)
            if hi > lo:
                gaps.append((lo, hi))
    gaps.sort()
    removed = Fraction(0)
    cur_lo = cur_hi = None
    for lo, hi in gaps:
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                removed += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    if cur_hi is not None:
        removed += cur_hi - cur_lo
    upper = float((b - a) - removed)
    tail = 0.0
    length = float(b - a)
    for l in range(k_exact + 1, k_exact + 40):
        count = length * 2.0 ** (l * l) + 2.0
        term = count * 2.0 ** (-(l ** 3))
        tail += term
        if term < 1e-300:
            break
    return max(0.0, upper - tail), upper


def _tail_log2(k: int, alpha: float) -> float:
    """log2 of sum_{l >= k} 2**(l**2 - alpha * l**3)."""
    exps = []
    l = k
    peak = 2.0 / (3.0 * alpha)
    while True:
        e = l * l - alpha * l ** 3
        exps.append(e)
        if l > peak and e < max(exps) - 80.0:
            break
        l += 1
    top = max(exps)
    return top + math.log2(math.fsum(2.0 ** (e - top) for e in exps))


def gap_tail_sum(k: int, alpha: float) -> float:
    """``sum_{l >= k} 2**(l**2) * (2**-(l**3))**alpha``."""
    if k < 2:
        raise InvalidArgument(f"k must be >= 2, got {k}")
    if not 0.0 < alpha <= 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1], got {alpha}")
    return 2.0 ** _tail_log2(k, alpha)


def minimal_k(alpha: float, p_m: float) -> int:
    """Smallest ``k >= 2`` with ``gap_tail_sum(k, alpha) <= p_m * 2**-k**2 / 1000``."""
    if not 0.0 < alpha <= 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1], got {alpha}")
    if not p_m > 0.0:
        raise InvalidArgument(f"p_m must be positive, got {p_m}")
    budget = math.log2(p_m) - math.log2(1000.0)
    k = 2
    while _tail_log2(k, alpha) > budget - k * k:
        k += 1
    return k


# ---------------------------------------------------------------------------
# iterated function systems

@dataclass(frozen=True)
class Similarity:
    """``x -> ratio * R(angle) @ x + offset``; rotation is only defined for p = 2."""

    ratio: float
    offset: tuple
    angle: float = 0.0

    @property
    def p(self):
        return len(self.offset)

    def linear(self):
        p = self.p
        if self.angle and p != 2:
            raise InvalidIFS("rotations are only supported in the plane")
        if p == 2:
            c, s = math.cos(self.angle), math.sin(self.angle)
            rot = np.array([[c, -s], [s, c]])
        else:
            rot = np.eye(p)
        return self.ratio * rot

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.linear().T + np.asarray(self.offset, dtype=float)

    def fixed_point(self):
        return np.linalg.solve(np.eye(self.p) - self.linear(), np.asarray(self.offset, dtype=float))


@dataclass(frozen=True)
class IFS:
    maps: tuple
    bounds: tuple

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds))
        if len(maps) < 2:
            raise InvalidIFS(f"an IFS needs at least two maps, got {len(maps)}")
        p = len(self.bounds)
        for f in maps:
            if not 0.0 < f.ratio < 1.0:
                raise InvalidIFS(f"ratio {f.ratio} not in (0, 1)")
            if f.p != p:
                raise InvalidIFS(f"map offset {f.offset} does not match p={p}")
            f.linear()
        lo, hi = self.lo, self.hi
        corners = _cube_corners(lo, hi)
        tol = 1e-12 * float(np.max(hi - lo))
        for f in maps:
            img = f(corners)
            if np.any(img < lo - tol) or np.any(img > hi + tol):
                raise InvalidIFS(f"map {f} sends the ambient cube outside itself")

    @property
    def p(self):
        return len(self.bounds)

    @property
    def lo(self):
        return np.array([b[0] for b in self.bounds])

    @property
    def hi(self):
        return np.array([b[1] for b in self.bounds])

    @property
    def q_min(self):
        return min(f.ratio for f in self.maps)

    @property
    def q_max(self):
        return max(f.ratio for f in self.maps)

    def linear_parts(self):
        return np.stack([f.linear() for f in self.maps]), np.array([f.offset for f in self.maps], dtype=float)


def sierpinski_preset() -> IFS:
    """Right Sierpiński gasket with legs 1/2 (diameter below one) in the cube ``[0, 1/2]**2``."""
    return IFS((Similarity(0.5, (0.0, 0.0)), Similarity(0.5, (0.25, 0.0)), Similarity(0.5, (0.0, 0.25))),
               ((0.0, 0.5), (0.0, 0.5)))


def square_ifs(p: int = 2) -> IFS:
    """``2**p`` half-size maps whose attractor is the whole unit cube."""
    maps = tuple(Similarity(0.5, tuple(0.5 * np.array(c))) for c in itertools.product((0, 1), repeat=p))
    return IFS(maps, tuple((0.0, 1.0) for _ in range(p)))


def _cube_corners(lo, hi):
    p = len(lo)
    bits = np.array(list(itertools.product((0, 1), repeat=p)), dtype=float)
    return lo + bits * (hi - lo)


def _snap(u):
    r = np.rint(u)
    return np.where(np.abs(u - r) < _SNAP, r, u)


def _compose(A, b, mA, mb):
    """All compositions ``current o map_i``; returns stacked linear parts and offsets."""
    newA = np.einsum("nij,mjk->nmik", A, mA).reshape(-1, A.shape[1], A.shape[2])
    newb = (np.einsum("nij,mj->nmi", A, mb) + b[:, None, :]).reshape(-1, b.shape[1])
    return newA, newb


def _image_boxes(A, b, corners, lo, h):
    pts = np.einsum("nij,cj->nci", A, corners) + b[:, None, :]
    u0 = _snap((pts.min(axis=1) - lo) / h)
    u1 = _snap((pts.max(axis=1) - lo) / h)
    return pts, u0, u1


def ifs_rasterize(ifs: IFS, depth: int, N: int) -> GridSet:
    """Cells whose interior meets the depth-``depth`` prefractal (images of the ambient cube).

    An image that fits inside one closed cell marks that cell for every deeper
    prefractal too, so it is retired early; this keeps huge depths cheap.
    Straddling images are refined until they drop below float resolution and are
    then rasterized outward.
    """
    if depth < 1:
        raise InvalidArgument(f"depth must be >= 1, got {depth}")
    if N < 0:
        raise InvalidArgument(f"N must be >= 0, got {N}")
    p = ifs.p
    lo, hi = ifs.lo, ifs.hi
    n_side = 1 << N
    h = (hi - lo) / n_side
    corners = _cube_corners(lo, hi)
    mA, mb = ifs.linear_parts()
    cells = np.zeros((n_side,) * p, dtype=bool)
    A = np.eye(p)[None]
    b = np.zeros((1, p))
    side = float(np.max(hi - lo))
    for d in range(depth):
        if A.shape[0] * len(ifs.maps) > _MAX_IMAGES:
            break
        A, b = _compose(A, b, mA, mb)
        _, u0, u1 = _image_boxes(A, b, corners, lo, h)
        i0 = np.clip(np.floor(u0).astype(np.int64), 0, n_side - 1)
        i1 = np.clip(np.ceil(u1).astype(np.int64) - 1, 0, n_side - 1)
        single = np.all(i0 == i1, axis=1)
        if np.any(single):
            cells[tuple(i0[single].T)] = True
            A, b = A[~single], b[~single]
        if A.shape[0] == 0:
            break
        if ifs.q_max ** (d + 1) * side < 1e-9 * float(np.min(h)):
            break
    if A.shape[0]:
        _rasterize_images(cells, A, b, corners, lo, h)
    return GridSet(cells, ifs.bounds)


def _rasterize_images(cells, A, b, corners, lo, h):
    p = cells.ndim
    n_side = cells.shape[0]
    pts, u0, u1 = _image_boxes(A, b, corners, lo, h)
    i0 = np.clip(np.floor(u0).astype(np.int64), 0, n_side - 1)
    i1 = np.clip(np.ceil(u1).astype(np.int64) - 1, 0, n_side - 1)
    vol_box = np.prod((u1 - u0), axis=1)
    vol_img = np.abs(np.linalg.det(A)) * float(np.prod((corners.max(0) - corners.min(0)) / h))
    aligned = np.abs(vol_box - vol_img) <= 1e-9 * np.maximum(vol_box, 1.0)
    # axis-aligned images: every cell of the index box
    if np.any(aligned):
        spans = (i1 - i0 + 1)[aligned]
        starts = i0[aligned]
        for shape in {tuple(s) for s in spans}:
            sel = np.all(spans == np.array(shape), axis=1)
            offs = np.indices(shape).reshape(p, -1).T
            idx = (starts[sel][:, None, :] + offs[None, :, :]).reshape(-1, p)
            cells[tuple(idx.T)] = True
    for k in np.nonzero(~aligned)[0]:
        poly = (pts[k] - lo) / h
        ranges = [range(i0[k, d], i1[k, d] + 1) for d in range(p)]
        for idx in itertools.product(*ranges):
            if _interiors_overlap_2d(poly, np.array(idx, dtype=float)):
                cells[idx] = True


def _interiors_overlap_2d(corner_pts, cell_lo):
    """Separating-axis test between a parallelogram (image of a square) and a unit cell."""
    c = corner_pts[:, :2]
    center = c.mean(axis=0)
    ang = np.arctan2(c[:, 1] - center[1], c[:, 0] - center[0])
    poly = c[np.argsort(ang)]
    cell = cell_lo + np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    axes = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    for i in range(len(poly)):
        e = poly[(i + 1) % len(poly)] - poly[i]
        nrm = np.array([-e[1], e[0]])
        if np.linalg.norm(nrm) > 0:
            axes.append(nrm / np.linalg.norm(nrm))
    for ax in axes:
        a, bproj = poly @ ax, cell @ ax
        if min(a.max(), bproj.max()) - max(a.min(), bproj.min()) <= 1e-12:
            return False
    return True


def ifs_words(ifs: IFS, depth: int):
    """Linear parts and offsets of all ``m**depth`` compositions."""
    mA, mb = ifs.linear_parts()
    A = np.eye(ifs.p)[None]
    b = np.zeros((1, ifs.p))
    for _ in range(depth):
        A, b = _compose(A, b, mA, mb)
    return A, b


def ifs_points(ifs: IFS, depth: int):
    """Exact attractor points: images of the maps' fixed points under all depth-``depth`` words."""
    fixed = np.array([f.fixed_point() for f in ifs.maps])
    A, b = ifs_words(ifs, depth)
    pts = (np.einsum("nij,fj->nfi", A, fixed) + b[:, None, :]).reshape(-1, ifs.p)
    pts = np.where(np.abs(pts) < 1e-15, 0.0, pts)
    return np.unique(pts, axis=0)


def attractor_diameter(ifs: IFS, depth: int = 5) -> float:
    """Diameter of the attractor, from its convex-hull points at the given depth."""
    pts = ifs_points(ifs, depth)
    if len(pts) > 4000:
        from scipy.spatial import ConvexHull
        pts = pts[ConvexHull(pts).vertices] if ifs.p > 1 else pts[[pts.argmin(), pts.argmax()]]
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d * d).sum(-1)).max())


def load_ifs(path) -> IFS:
    """Read the key-value IFS format.

    ``bounds = lo hi`` (cube, repeated for every axis) or ``bounds = lo0 hi0 lo1 hi1 ...``;
    one ``map = ratio o_1 ... o_p [angle]`` line per similarity. ``#`` starts a comment.
    ``dim = p`` is required when an angle makes the offset length ambiguous.
    """
    bounds_vals = None
    dim = None
    raw_maps = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidIFS(f"{path}:{lineno}: expected key = value")
            key, val = (t.strip() for t in line.split("=", 1))
            try:
                nums = [float(t) for t in val.replace(",", " ").split()]
            except ValueError:
                raise InvalidIFS(f"{path}:{lineno}: non-numeric value in {val!r}") from None
            if key == "map":
                raw_maps.append(nums)
            elif key == "bounds":
                bounds_vals = nums
            elif key == "dim":
                dim = int(nums[0])
            else:
                raise InvalidIFS(f"{path}:{lineno}: unknown key {key!r}")
    if not raw_maps:
        raise InvalidIFS(f"{path}: no maps")
    if dim is None:
        dim = len(raw_maps[0]) - 1
    maps = []
    for nums in raw_maps:
        if len(nums) == dim + 1:
            maps.append(Similarity(nums[0], tuple(nums[1:])))
        elif len(nums) == dim + 2:
            maps.append(Similarity(nums[0], tuple(nums[1:-1]), nums[-1]))
        else:
            raise InvalidIFS(f"{path}: map line {nums} does not fit dim={dim}")
    if bounds_vals is None:
        bounds = tuple((0.0, 1.0) for _ in range(dim))
    elif len(bounds_vals) == 2:
        bounds = tuple((bounds_vals[0], bounds_vals[1]) for _ in range(dim))
    elif len(bounds_vals) == 2 * dim:
        bounds = tuple((bounds_vals[2 * d], bounds_vals[2 * d + 1]) for d in range(dim))
    else:
        raise InvalidIFS(f"{path}: bounds need 2 or {2 * dim} numbers")
    return IFS(tuple(maps), bounds)


def dump_ifs(ifs: IFS) -> str:
    lines = [f"dim = {ifs.p}", "bounds = " + " ".join(repr(v) for b in ifs.bounds for v in b)]
    for f in ifs.maps:
        parts = [repr(f.ratio)] + [repr(float(o)) for o in f.offset]
        if f.angle:
            parts.append(repr(f.angle))
        lines.append("map = " + " ".join(parts))
    return "\n".join(lines) + "\n"
