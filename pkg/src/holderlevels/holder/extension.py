"""Hölder extension by inf-convolution, and smoothing with a normalized bump kernel."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import ndimage
from scipy.integrate import quad

from .. import kernels
from ..errors import InvalidArgument, UnderResolvedKernel
from .functions import GridFunction, HolderSample, lattice_coords


def mcshane_extend(s: HolderSample, x, c=None):
    """``min_j values[j] + c * |x - points[j]|**alpha`` for one query or a batch.

    Queries that coincide with a sample point return that sample's value verbatim.
    """
    c = s.c if c is None else float(c)
    q = np.array(x, dtype=float)
    single = q.ndim == 1
    q = q.reshape(-1, s.p)
    out = kernels.mcshane_min(q, s.points, s.values, c, s.alpha)
    keys = _row_keys(s.points)
    order = np.argsort(keys)
    sorted_keys = keys[order]
    qkeys = _row_keys(q)
    pos = np.minimum(np.searchsorted(sorted_keys, qkeys), len(keys) - 1)
    hit = sorted_keys[pos] == qkeys
    out[hit] = s.values[order[pos[hit]]]
    return float(out[0]) if single else out


def _row_keys(a):
    a = np.ascontiguousarray(a, dtype=np.float64) + 0.0  # folds -0.0 into 0.0
    return a.view(np.dtype((np.void, 8 * a.shape[1]))).ravel()


def mcshane_grid(s: HolderSample, N: int, bounds=None, c=None) -> GridFunction:
    """The extension sampled on every vertex of the resolution-``N`` lattice."""
    bounds = tuple((0.0, 1.0) for _ in range(s.p)) if bounds is None else bounds
    coords = lattice_coords(bounds, N)
    vals = mcshane_extend(s, coords.reshape(-1, s.p), c)
    return GridFunction(vals.reshape(coords.shape[:-1]), s.alpha, s.c if c is None else c, bounds)


def bump(z):
    """``exp(-1/(1-|z|^2))`` inside the unit ball, zero outside."""
    z = np.asarray(z, dtype=float)
    sq = np.sum(z * z, axis=-1) if z.ndim else z * z
    out = np.zeros(np.shape(sq))
    inside = sq < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - sq[inside]))
    return out


class Mollifier:
    """Discrete radius-``r`` bump kernel on a lattice with spacing ``h``.

    Each vertex offset ``z`` gets the integral of the bump over the cell centred
    at ``z``, approximated by a midpoint rule on a ``4**p`` sub-grid; the weights
    are then normalized to sum to one.
    """

    SUB = 4

    def __init__(self, r, h, p):
        self.r = float(r)
        self.h = float(h)
        self.p = int(p)
        if not self.r > 0 or not self.h > 0:
            raise InvalidArgument("radius and spacing must be positive")
        if self.r < 2.0 * self.h:
            raise UnderResolvedKernel(f"radius {self.r} is below two grid steps ({2 * self.h})")
        reach = int(math.ceil(self.r / self.h))
        offs = np.arange(-reach, reach + 1)
        sub = (np.arange(self.SUB) + 0.5) / self.SUB - 0.5
        grids = np.meshgrid(*([offs] * self.p), indexing="ij")
        centre = np.stack(grids, axis=-1).astype(float)
        acc = np.zeros(centre.shape[:-1])
        for shift in itertools.product(sub, repeat=self.p):
            acc += bump((centre + np.array(shift)) * self.h / self.r)
        cell = (self.h / self.SUB) ** self.p
        raw = acc * cell
        self.raw_integral = float(raw.sum())
        self.weights = raw / self.raw_integral
        self.weights.setflags(write=False)

    @property
    def normalization(self):
        """Quadrature value of ``c_r``: the factor making the radius-``r`` bump integrate to one."""
        return 1.0 / self.raw_integral

    def normalization_exact(self):
        """``c_r`` by one-dimensional radial quadrature."""
        radial, _ = quad(lambda t: math.exp(-1.0 / (1.0 - t * t)) * t ** (self.p - 1), 0.0, 1.0,
                         epsabs=0.0, epsrel=1e-13, limit=200)
        sphere = 2.0 * math.pi ** (self.p / 2.0) / math.gamma(self.p / 2.0)
        return 1.0 / (sphere * radial * self.r ** self.p)

    def weight_sum(self):
        return float(self.weights.sum())


def mollify(f: GridFunction, m) -> GridFunction:
    """Convolve the lattice values with the kernel; borders repeat the edge values.

    Edge repetition is a 1-Lipschitz retraction onto the lattice, so the output
    keeps the input's discrete Hölder constant.
    """
    if not isinstance(m, Mollifier):
        m = Mollifier(float(m), float(np.max(f.step)), f.p)
    if m.p != f.p:
        raise InvalidArgument(f"kernel dimension {m.p} does not match function dimension {f.p}")
    if not np.allclose(f.step, m.h, rtol=1e-12):
        raise InvalidArgument("mollify needs an isotropic lattice matching the kernel spacing")
    out = ndimage.convolve(np.asarray(f.values), m.weights, mode="nearest")
    return f.with_values(out)
