"""Sampled Hölder functions: scattered samples, vertex-lattice functions, and constant estimation."""

from __future__ import annotations

import itertools
import struct
from typing import NamedTuple

import numpy as np

from .. import kernels
from ..errors import FormatError, HolderViolation, InsufficientData, InvalidArgument, OutOfDomain
from ..grid import unit_bounds

FUN_MAGIC = b"HLFUN001"
DEFAULT_SEED = 20240917
_REL_TOL = 1e-12


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1], got {alpha}")
    return alpha


class HolderSample:
    """Finite ``(point, value)`` data with a claimed Hölder exponent and constant.

    The pairwise bound is verified exhaustively on construction (pass
    ``check=False`` to skip it for very large samples).
    """

    def __init__(self, points, values, alpha, c, check=True):
        pts = np.array(points, dtype=float, ndmin=2)
        if pts.ndim != 2:
            raise InvalidArgument("points must be a (n, p) array")
        vals = np.array(values, dtype=float).reshape(-1)
        if pts.shape[0] != vals.shape[0]:
            raise InvalidArgument(f"{pts.shape[0]} points but {vals.shape[0]} values")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(vals))):
            raise InvalidArgument("non-finite sample data")
        self.alpha = _check_alpha(alpha)
        self.c = float(c)
        if not self.c > 0:
            raise InvalidArgument(f"Hölder constant must be positive, got {c}")
        pts.setflags(write=False)
        vals.setflags(write=False)
        self.points = pts
        self.values = vals
        if check and len(vals) > 1:
            q = kernels.max_holder_quotient(pts, vals, self.alpha)
            if q > self.c * (1.0 + _REL_TOL):
                raise HolderViolation(f"sample quotient {q} exceeds claimed constant {self.c}")

    @property
    def p(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.values)


class GridFunction:
    """Values at the ``(2**N + 1)**p`` vertices of the dyadic lattice over ``bounds``."""

    __slots__ = ("_values", "_bounds", "alpha", "c")

    def __init__(self, values, alpha=1.0, c=1.0, bounds=None):
        vals = np.array(values, dtype=float, copy=True)
        p = vals.ndim
        if not 1 <= p <= 3:
            raise InvalidArgument(f"dimension p={p} outside 1..3")
        side = vals.shape[0] - 1
        if any(s != side + 1 for s in vals.shape) or side < 1 or side & (side - 1):
            raise InvalidArgument(f"vertex array shape {vals.shape} is not (2**N + 1,)*p")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("grid function values must be finite")
        bounds = unit_bounds(p) if bounds is None else tuple((float(a), float(b)) for a, b in bounds)
        if len(bounds) != p or any(not b > a for a, b in bounds):
            raise InvalidArgument(f"bad bounds {bounds} for p={p}")
        vals.setflags(write=False)
        self._values = vals
        self._bounds = bounds
        self.alpha = _check_alpha(alpha)
        self.c = float(c)

    @classmethod
    def from_callable(cls, fn, p, N, alpha=1.0, c=1.0, bounds=None):
        """Sample ``fn`` (taking an ``(m, p)`` array) at every lattice vertex."""
        bounds = unit_bounds(p) if bounds is None else bounds
        proto = cls(np.zeros((2,) * p), alpha, c, bounds)
        coords = lattice_coords(proto.bounds, N)
        vals = np.asarray(fn(coords.reshape(-1, p)), dtype=float).reshape(coords.shape[:-1])
        return cls(vals, alpha, c, bounds)

    @property
    def values(self):
        return self._values

    @property
    def p(self):
        return self._values.ndim

    @property
    def N(self):
        return int(self._values.shape[0] - 1).bit_length() - 1

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
        return (self.hi - self.lo) / (1 << self.N)

    def coords(self):
        """Vertex coordinates, shape ``(2**N + 1,)*p + (p,)``."""
        return lattice_coords(self._bounds, self.N)

    def with_values(self, values, alpha=None, c=None):
        return GridFunction(values, self.alpha if alpha is None else alpha,
                            self.c if c is None else c, self._bounds)

    def compatible(self, other):
        return self._values.shape == other.values.shape and self._bounds == other.bounds

    def evaluate(self, points):
        """Multilinear interpolation; exact at lattice vertices."""
        pts = np.array(points, dtype=float, ndmin=2)
        if pts.shape[1] != self.p:
            raise InvalidArgument(f"points have dimension {pts.shape[1]}, function has {self.p}")
        u = (pts - self.lo) / self.step
        n = 1 << self.N
        tol = 1e-9
        if np.any(u < -tol) or np.any(u > n + tol):
            raise OutOfDomain("evaluation point outside the lattice bounds")
        r = np.rint(u)
        u = np.where(np.abs(u - r) < tol, r, u)
        i0 = np.clip(np.floor(u).astype(np.int64), 0, n - 1)
        t = u - i0
        out = np.zeros(len(pts))
        for corner in itertools.product((0, 1), repeat=self.p):
            w = np.ones(len(pts))
            for d, bit in enumerate(corner):
                w = w * (t[:, d] if bit else 1.0 - t[:, d])
            nz = w != 0.0
            if np.any(nz):
                idx = tuple(i0[nz, d] + corner[d] for d in range(self.p))
                out[nz] += w[nz] * self._values[idx]
        return out

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return (self._bounds == other._bounds and self.alpha == other.alpha and self.c == other.c
                and self._values.shape == other._values.shape
                and bool(np.array_equal(self._values, other._values)))

    __hash__ = None

    def __repr__(self):
        return f"GridFunction(p={self.p}, N={self.N}, alpha={self.alpha}, c={self.c})"


def lattice_coords(bounds, N):
    axes = [np.linspace(lo, hi, (1 << N) + 1) for lo, hi in bounds]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def write_function(f: GridFunction, path):
    """HLFUN001: magic, p (u8), N (u8), alpha, c, per-axis (lo, hi), then vertex values; all f64 LE."""
    head = FUN_MAGIC + struct.pack("<BBdd", f.p, f.N, f.alpha, f.c)
    head += struct.pack("<" + "d" * (2 * f.p), *[v for b in f.bounds for v in b])
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_function(path) -> GridFunction:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != FUN_MAGIC:
        raise FormatError(f"{path}: not an HLFUN001 file")
    try:
        p, N, alpha, c = struct.unpack_from("<BBdd", data, 8)
    except struct.error as exc:
        raise FormatError(f"{path}: truncated header") from exc
    if not 1 <= p <= 3 or N > 24:
        raise FormatError(f"{path}: bad header p={p} N={N}")
    off = 8 + 18
    try:
        flat = struct.unpack_from("<" + "d" * (2 * p), data, off)
    except struct.error as exc:
        raise FormatError(f"{path}: truncated bounds") from exc
    off += 16 * p
    count = ((1 << N) + 1) ** p
    if len(data) - off != 8 * count:
        raise FormatError(f"{path}: expected {8 * count} value bytes, found {len(data) - off}")
    vals = np.frombuffer(data, dtype="<f8", offset=off).reshape(((1 << N) + 1,) * p)
    return GridFunction(vals, alpha, c, tuple((flat[2 * d], flat[2 * d + 1]) for d in range(p)))


class HolderEstimate(NamedTuple):
    """A Hölder quotient supremum; ``exact`` is False when it came from sampling (a lower bound)."""

    value: float
    exact: bool

    def __float__(self):
        return float(self.value)


def holder_constant(f, alpha=None, pair_budget=10 ** 7, seed=DEFAULT_SEED) -> HolderEstimate:
    """Supremum of ``|f(x) - f(y)| / |x - y|**alpha``.

    Exhaustive when the number of points squared fits the budget. Above it,
    lattice functions are scanned one displacement vector at a time (exact over
    all pairs sharing that displacement), stratified over dyadic shells of the
    displacement length; scattered samples fall back to seeded random pairs.
    """
    if isinstance(f, GridFunction):
        alpha = f.alpha if alpha is None else _check_alpha(alpha)
        n = f.values.size
        if n < 2:
            raise InsufficientData("need at least 2 points")
        if n * n <= pair_budget:
            pts = f.coords().reshape(-1, f.p)
            return HolderEstimate(kernels.max_holder_quotient(pts, f.values.reshape(-1), alpha), True)
        return HolderEstimate(_grid_displacement_scan(f, alpha, pair_budget, seed), False)
    if isinstance(f, HolderSample):
        alpha = f.alpha if alpha is None else _check_alpha(alpha)
        pts, vals = f.points, f.values
    else:
        pts, vals = f
        pts = np.array(pts, dtype=float, ndmin=2)
        vals = np.asarray(vals, dtype=float).reshape(-1)
        alpha = _check_alpha(1.0 if alpha is None else alpha)
    n = len(vals)
    if n < 2:
        raise InsufficientData("need at least 2 points")
    if n * n <= pair_budget:
        return HolderEstimate(kernels.max_holder_quotient(pts, vals, alpha), True)
    return HolderEstimate(_random_pairs(pts, vals, alpha, pair_budget, seed), False)


def _random_pairs(pts, vals, alpha, budget, seed):
    rng = np.random.default_rng(seed)
    n = len(vals)
    best = 0.0
    done = 0
    while done < budget:
        m = min(1 << 20, budget - done)
        i = rng.integers(0, n, m)
        j = rng.integers(0, n, m)
        d = np.sqrt(((pts[i] - pts[j]) ** 2).sum(axis=1))
        dv = np.abs(vals[i] - vals[j])
        keep = d > 0
        if np.any(dv[~keep] > 0):
            return float("inf")
        if np.any(keep):
            best = max(best, float(np.max(dv[keep] / d[keep] ** alpha)))
        done += m
    return best


def _canonical(d):
    nz = next((x for x in d if x != 0), 0)
    return nz > 0


def _grid_displacement_scan(f, alpha, budget, seed):
    vals = f.values
    p = f.p
    side = vals.shape[0]
    step = f.step
    n_disp = max(2 * p, budget // vals.size)
    rng = np.random.default_rng(seed)
    chosen = []
    radius = 1
    while True:
        box = [d for d in itertools.product(range(-radius, radius + 1), repeat=p) if _canonical(d)]
        if len(box) > n_disp // 2 or radius >= side - 1:
            break
        radius += 1
    radius -= 1
    chosen.extend(d for d in itertools.product(range(-radius, radius + 1), repeat=p) if _canonical(d))
    shells = []
    s = max(1, radius + 1)
    while s < side:
        shells.append((s, min(2 * s, side)))
        s *= 2
    left = max(0, n_disp - len(chosen))
    # half the remaining budget samples the dyadic shells, the rest climbs from the best vector found
    per_shell = max(1, (left // 2) // max(1, len(shells)))
    seen = set(chosen)
    for lo_r, hi_r in shells:
        tries = 0
        got = 0
        while got < per_shell and tries < 50 * per_shell:
            tries += 1
            d = tuple(int(x) for x in rng.integers(-hi_r + 1, hi_r, p))
            if max(abs(x) for x in d) < lo_r or not _canonical(d) or d in seen:
                continue
            seen.add(d)
            chosen.append(d)
            got += 1
    scores = {d: _displacement_quotient(vals, d, step, alpha) for d in chosen}
    climb = max(0, n_disp - len(scores))
    cur = max(scores, key=scores.get) if scores else None
    while climb > 0 and cur is not None:
        moved = False
        for e in itertools.product((-1, 0, 1), repeat=p):
            d = tuple(a + b for a, b in zip(cur, e))
            if not any(d):
                continue
            if not _canonical(d):
                d = tuple(-x for x in d)
            if d in scores or max(abs(x) for x in d) >= side:
                continue
            scores[d] = _displacement_quotient(vals, d, step, alpha)
            climb -= 1
            if scores[d] > scores[cur]:
                cur, moved = d, True
            if climb == 0:
                break
        if not moved:
            break
    return max(scores.values()) if scores else 0.0


def _displacement_quotient(vals, d, step, alpha):
    """Exact max quotient over every lattice pair separated by the vector ``d``."""
    side = vals.shape[0]
    a = tuple(slice(max(0, -x), side - max(0, x)) for x in d)
    b = tuple(slice(max(0, x), side - max(0, -x)) for x in d)
    dv = float(np.max(np.abs(vals[a] - vals[b])))
    dist = float(np.sqrt(np.sum((np.array(d) * step) ** 2)))
    return dv / dist ** alpha


def clamp_combine(f_n: GridFunction, f_nk: GridFunction, bound: float) -> GridFunction:
    """``min(f_n + bound, max(f_nk, f_n - bound))`` vertex by vertex."""
    if not f_n.compatible(f_nk):
        raise InvalidArgument("clamp_combine needs functions on the same lattice")
    if not bound >= 0:
        raise InvalidArgument(f"bound must be nonnegative, got {bound}")
    out = np.minimum(f_n.values + bound, np.maximum(f_nk.values, f_n.values - bound))
    return f_nk.with_values(out, c=max(f_n.c, f_nk.c))


def perturb_nonconstant(f: GridFunction, tau: float) -> GridFunction:
    """Add ``tau * (x_1 + ... + x_p)``; the claimed constant grows by the tilt's Hölder constant."""
    coords = f.coords()
    extent = float(np.sqrt(np.sum((f.hi - f.lo) ** 2)))
    tilt_c = abs(tau) * np.sqrt(f.p) * extent ** (1.0 - f.alpha)
    return f.with_values(f.values + tau * coords.sum(axis=-1), c=f.c + tilt_c)
