"""Planting rescaled copies of a reference function into a piecewise-affine one on a self-similar set.

Given ``f_n`` with range ``[m, M]`` on the attractor, ``L - 1`` levels
``p(t) = m + t (M - m) / L`` are picked, each gets an anchor ``x(t)`` with
``f_n(x(t)) ~ p(t)`` and a small similar copy ``Phi_t(F)`` containing it. On the
copy the function becomes ``f_n(x(t)) + q**alpha (f_0(Phi_t^-1 x) - f_0(Phi_t^-1 x(t)))``.
That function is extended to the lattice by inf-convolution and clamped to
within ``1/(n+k)`` of ``f_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import InvalidArgument, LevelNotAttained, LTooSmall, ResolutionTooLow
from ..fractals import IFS, attractor_diameter, ifs_points
from .extension import mcshane_grid
from .functions import GridFunction, HolderSample, clamp_combine
from .simplicial import SimplicialInterpolant


@dataclass(frozen=True)
class Placement:
    t: int
    level: float
    anchor: tuple
    anchor_value: float
    word: tuple
    ratio: float
    offset: tuple
    diameter: float


@dataclass
class RescaledCopy:
    f_star: GridFunction
    f_n: GridFunction
    placements: list
    L: int
    K_n: float
    c_n: float
    m_n: float
    M_n: float
    rho: float
    bound: float
    copy_points: np.ndarray
    copy_values: np.ndarray
    copy_index: np.ndarray
    attempts: list = field(default_factory=list)

    @property
    def half_width(self):
        """Half-length of the value window ``(M - m) / (3L)`` reserved around each level."""
        return (self.M_n - self.m_n) / (3.0 * self.L)

    def subranges(self):
        return [(pl.level - self.half_width, pl.level + self.half_width) for pl in self.placements]


def _words_and_points(ifs: IFS, depth: int):
    """Every depth-``depth`` word (as an integer in base ``m``) with the images of all fixed points."""
    mA, mb = ifs.linear_parts()
    # word index = sum digit_i * m**(depth-1-i), outermost map first
    A = np.eye(ifs.p)[None]
    b = np.zeros((1, ifs.p))
    for _ in range(depth):
        newA = np.einsum("nij,mjk->nmik", A, mA).reshape(-1, ifs.p, ifs.p)
        newb = (np.einsum("nij,mj->nmi", A, mb) + b[:, None, :]).reshape(-1, ifs.p)
        A, b = newA, newb
    fixed = np.array([f.fixed_point() for f in ifs.maps])
    pts = np.einsum("nij,fj->nfi", A, fixed) + b[:, None, :]
    words = np.repeat(np.arange(A.shape[0]), len(fixed))
    return words, pts.reshape(-1, ifs.p) + 0.0


def _word_map(ifs: IFS, digits):
    A = np.eye(ifs.p)
    b = np.zeros(ifs.p)
    for d in digits:
        f = ifs.maps[d]
        b = A @ np.asarray(f.offset, dtype=float) + b
        A = A @ f.linear()
    return A, b


def _digits(word, depth, m):
    out = []
    for _ in range(depth):
        out.append(int(word % m))
        word //= m
    return tuple(reversed(out))


def _vertex_index(points, lo, step, n):
    u = (points - lo) / step
    r = np.rint(u)
    on = np.all(np.abs(u - r) < 1e-9, axis=1) & np.all((r >= 0) & (r <= n), axis=1)
    return r.astype(np.int64), on


def rescaled_copy(f_n: SimplicialInterpolant, f_0, ifs: IFS, n: int, k: int, N: int, alpha: float,
                  L: int | None = None, K_n: float | None = None, c_n: float | None = None,
                  max_doublings: int = 10) -> RescaledCopy:
    """Build the clamped function with ``L - 1`` planted copies, doubling ``L`` until the checks pass.

    ``f_0`` is a :class:`GridFunction` (or callable) on the ambient cube with
    ``|f_0| <= 1/2`` on the attractor. The Lipschitz constant ``K_n`` defaults to
    ``max(1, lipschitz_constant)`` and the Hölder constant ``c_n`` to
    ``lipschitz_constant * diam(F)**(1 - alpha)``, which must be below 1.
    """
    if n < 1 or k < 1:
        raise InvalidArgument("n and k must be positive")
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1) for the copy construction, got {alpha}")
    lip = f_n.lipschitz_constant()
    diam = attractor_diameter(ifs)
    K_n = max(1.0, lip) if K_n is None else float(K_n)
    c_n = lip * diam ** (1.0 - alpha) if c_n is None else float(c_n)
    if not c_n < 1.0:
        raise InvalidArgument(f"f_n must be c-Hölder with c < 1; got c_n={c_n}")
    fn_grid = f_n.to_grid_function(N, alpha, c_n)
    lo, step = fn_grid.lo, fn_grid.step
    nside = 1 << N
    words, pts = _words_and_points(ifs, N)
    idx, on = _vertex_index(pts, lo, step, nside)
    if not np.any(on):
        raise LevelNotAttained("no attractor point lies on the lattice")
    words, pts, idx = words[on], pts[on], idx[on]
    fvals = fn_grid.values[tuple(idx.T)]
    m_n, M_n = float(fvals.min()), float(fvals.max())
    if not M_n > m_n:
        raise InvalidArgument("f_n is constant on the attractor")
    f0_eval = f_0.evaluate if isinstance(f_0, GridFunction) else (lambda x: np.asarray(f_0(x), dtype=float))
    bound = 1.0 / (n + k)
    L = int(math.floor((n + k) * (M_n - m_n + 1.0))) + 1 if L is None else int(L)
    attempts = []
    for _ in range(max_doublings + 1):
        try:
            res = _place(ifs, fn_grid, f0_eval, words, pts, idx, fvals, m_n, M_n, L, alpha,
                         K_n, c_n, diam, N, bound)
        except LTooSmall as exc:
            attempts.append((L, exc.reason))
            L *= 2
            continue
        res.attempts = attempts
        return res
    raise LTooSmall(L, f"checks still failing after {max_doublings} doublings")


def _place(ifs, fn_grid, f0_eval, words, pts, idx, fvals, m_n, M_n, L, alpha, K_n, c_n, diam, N, bound):
    m = len(ifs.maps)
    rho = ((M_n - m_n) / (3.0 * L)) ** (1.0 / alpha)
    tol = 2.0 ** (-N) * K_n
    placements = []
    copy_pts, copy_vals, copy_idx = [], [], []
    preimage_cache = {}
    for t in range(1, L):
        level = m_n + t * (M_n - m_n) / L
        j = int(np.argmin(np.abs(fvals - level)))
        if abs(fvals[j] - level) > tol:
            raise LevelNotAttained(f"level {level} not attained within {tol} on the lattice")
        anchor = pts[j]
        anchor_val = float(fvals[j])
        full = _digits(int(words[j]), N, m)
        depth, ratio = 0, 1.0
        while ratio * diam > rho:
            if depth == N:
                raise ResolutionTooLow(f"copy for level {t} needs depth beyond N={N}")
            ratio *= ifs.maps[full[depth]].ratio
            depth += 1
        word = full[:depth]
        A, b = _word_map(ifs, word)
        if N - depth not in preimage_cache:
            base = ifs_points(ifs, N - depth) if N - depth > 0 else np.array([f.fixed_point() for f in ifs.maps])
            preimage_cache[N - depth] = (base, f0_eval(base))
        base, f0_base = preimage_cache[N - depth]
        u_anchor = np.linalg.solve(A, anchor - b)
        f0_anchor = float(f0_eval(u_anchor[None, :])[0])
        images = base @ A.T + b + 0.0
        values = anchor_val + ratio ** alpha * (f0_base - f0_anchor)
        # the anchor itself must carry f_n's value exactly
        hit = np.all(images == anchor, axis=1)
        values[hit] = anchor_val
        placements.append(Placement(t, float(level), tuple(float(v) for v in anchor), anchor_val, word,
                                    float(ratio), tuple(float(v) for v in b), float(ratio * diam)))
        copy_pts.append(images)
        copy_vals.append(values)
        copy_idx.append(np.full(len(images), t - 1))
    for a in range(len(placements)):
        for c in range(a + 1, len(placements)):
            pa, pc = placements[a], placements[c]
            gap = float(np.linalg.norm(np.subtract(pa.anchor, pc.anchor)))
            if not gap > pa.diameter + pc.diameter:
                raise LTooSmall(L, f"copies {pa.t} and {pc.t} may overlap")
    P = np.concatenate(copy_pts)
    V = np.concatenate(copy_vals)
    T = np.concatenate(copy_idx)
    vidx, on = _vertex_index(P, fn_grid.lo, fn_grid.step, 1 << N)
    fn_at = np.where(on, fn_grid.values[tuple(np.where(on[:, None], vidx, 0).T)], fn_grid.evaluate(P))
    if not np.all(np.abs(V - fn_at) < bound):
        raise LTooSmall(L, "copy values leave the 1/(n+k) band around f_n")
    c_star = 0.5 * (1.0 + c_n)
    if len(V) > 1 and kernels.max_holder_quotient(P, V, alpha) > c_star:
        raise LTooSmall(L, "copy values exceed the (1+c_n)/2 Hölder constant")
    sample = HolderSample(P, V, alpha, c_star, check=False)
    ext = mcshane_grid(sample, N, fn_grid.bounds, c_star)
    clamped = clamp_combine(fn_grid, ext, bound)
    f_star = clamped.with_values(clamped.values, c=c_star)
    return RescaledCopy(f_star, fn_grid, placements, L, K_n, c_n, m_n, M_n, rho, bound, P, V, T)
