"""Piecewise-affine interpolation on a cube subdivision, and the edge/height Lipschitz bound."""

from __future__ import annotations

import itertools
import json

import numpy as np

from ..errors import DegenerateSimplex, InvalidArgument, OutOfDomain
from .functions import GridFunction, lattice_coords

_DEGENERATE = 1e-12


def simplex_geometry(vertices):
    """``(a, b)``: longest edge, and smallest distance from a vertex to the affine hull of the rest."""
    v = np.array(vertices, dtype=float)
    k, p = v.shape
    if k != p + 1:
        raise InvalidArgument(f"a {p}-simplex needs {p + 1} vertices, got {k}")
    a = max(float(np.linalg.norm(v[i] - v[j])) for i in range(k) for j in range(i + 1, k))
    b = np.inf
    for i in range(k):
        rest = np.delete(v, i, axis=0)
        base = rest[0]
        span = (rest[1:] - base).T
        if span.size:
            coef, *_ = np.linalg.lstsq(span, v[i] - base, rcond=None)
            foot = base + span @ coef
        else:
            foot = base
        b = min(b, float(np.linalg.norm(v[i] - foot)))
    if a == 0.0 or b <= _DEGENERATE * a:
        raise DegenerateSimplex(f"simplex {v.tolist()} is degenerate (a={a}, b={b})")
    return a, b


def simplicial_lipschitz_bound(vertices, K) -> float:
    """``(p + 1) * K * a / b`` for a simplex whose vertex data is ``K``-Lipschitz."""
    if not K > 0:
        raise InvalidArgument(f"K must be positive, got {K}")
    a, b = simplex_geometry(vertices)
    p = len(vertices) - 1
    return (p + 1) * float(K) * a / b


def kuhn_simplices(p):
    """The ``p!`` simplices of the unit cube along monotone vertex paths, as ``(perm, vertices)``."""
    out = []
    for perm in itertools.permutations(range(p)):
        v = np.zeros((p + 1, p))
        for i, axis in enumerate(perm):
            v[i + 1] = v[i]
            v[i + 1, axis] = 1.0
        out.append((perm, v))
    return out


class SimplicialInterpolant:
    """Barycentric interpolation of lattice vertex values over a fixed pattern in every cell.

    ``pattern`` is ``"kuhn"`` or a list of simplices whose vertices are corners of the
    unit cube and which tile it.
    """

    def __init__(self, values, bounds=None, pattern="kuhn"):
        vals = np.array(values, dtype=float, copy=True)
        p = vals.ndim
        side = vals.shape[0] - 1
        if any(s != side + 1 for s in vals.shape) or side < 1:
            raise InvalidArgument(f"vertex array shape {vals.shape} is not (n + 1,)*p")
        self.values = vals
        self.values.setflags(write=False)
        self.bounds = tuple((0.0, 1.0) for _ in range(p)) if bounds is None else \
            tuple((float(a), float(b)) for a, b in bounds)
        self.cells_per_axis = side
        if isinstance(pattern, str):
            if pattern != "kuhn":
                raise InvalidArgument(f"unknown pattern {pattern!r}")
            self.pattern = "kuhn"
            self._simplices = [v for _, v in kuhn_simplices(p)]
        else:
            simp = [np.array(s, dtype=float) for s in pattern]
            for s in simp:
                if s.shape != (p + 1, p) or not np.all((s == 0.0) | (s == 1.0)):
                    raise InvalidArgument("pattern simplices need p+1 unit-cube corners each")
                simplex_geometry(s)
            vol = sum(abs(np.linalg.det(s[1:] - s[0])) for s in simp) / np.prod(np.arange(1, p + 1))
            if abs(vol - 1.0) > 1e-9:
                raise InvalidArgument("pattern simplices do not fill the unit cube")
            self.pattern = "custom"
            self._simplices = simp

    @property
    def p(self):
        return self.values.ndim

    @property
    def lo(self):
        return np.array([b[0] for b in self.bounds])

    @property
    def hi(self):
        return np.array([b[1] for b in self.bounds])

    @property
    def delta(self):
        return (self.hi - self.lo) / self.cells_per_axis

    def pattern_ratio(self):
        """Largest ``a / b`` over the pattern (invariant under the isotropic cell scaling)."""
        return max(a / b for a, b in (simplex_geometry(s) for s in self._simplices))

    def lipschitz_bound(self, K):
        return (self.p + 1) * float(K) * self.pattern_ratio()

    def simplices(self):
        """Every simplex as ``(vertex coordinates, vertex values)``; mainly for export and checks."""
        out = []
        for cell in itertools.product(range(self.cells_per_axis), repeat=self.p):
            base = np.array(cell)
            for s in self._simplices:
                idx = (base + s).astype(np.int64)
                out.append((self.lo + idx * self.delta, self.values[tuple(idx.T)]))
        return out

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        pts = np.array(x, dtype=float)
        single = pts.ndim == 1
        pts = pts.reshape(-1, self.p)
        u = (pts - self.lo) / self.delta
        n = self.cells_per_axis
        tol = 1e-9
        if np.any(u < -tol) or np.any(u > n + tol):
            raise OutOfDomain("query point outside the triangulated box")
        u = np.clip(u, 0.0, float(n))
        cell = np.minimum(np.floor(u).astype(np.int64), n - 1)
        t = u - cell
        if self.pattern == "kuhn":
            out = self._eval_kuhn(cell, t)
        else:
            out = self._eval_custom(cell, t)
        return float(out[0]) if single else out

    def _eval_kuhn(self, cell, t):
        p = self.p
        order = np.argsort(-t, axis=1, kind="stable")
        ts = np.take_along_axis(t, order, axis=1)
        gammas = np.empty((len(t), p + 1))
        gammas[:, 0] = 1.0 - ts[:, 0]
        gammas[:, 1:p] = ts[:, :-1] - ts[:, 1:]
        gammas[:, p] = ts[:, -1]
        vert = cell.copy()
        out = gammas[:, 0] * self.values[tuple(vert.T)]
        for i in range(p):
            vert[np.arange(len(t)), order[:, i]] += 1
            out = out + gammas[:, i + 1] * self.values[tuple(vert.T)]
        return out

    def _eval_custom(self, cell, t):
        out = np.full(len(t), np.nan)
        for s in self._simplices:
            T = (s[1:] - s[0]).T
            lam = np.linalg.solve(T, (t - s[0]).T).T
            bary = np.column_stack([1.0 - lam.sum(axis=1), lam])
            inside = np.all(bary >= -1e-12, axis=1) & np.isnan(out)
            if np.any(inside):
                val = np.zeros(inside.sum())
                for j in range(self.p + 1):
                    idx = cell[inside] + s[j].astype(np.int64)
                    val += bary[inside, j] * self.values[tuple(idx.T)]
                out[inside] = val
        if np.any(np.isnan(out)):
            raise OutOfDomain("query point not covered by the pattern")
        return out

    def lipschitz_constant(self):
        """Largest gradient norm over all simplices."""
        p = self.p
        best = 0.0
        if self.pattern == "kuhn":
            for perm, _ in kuhn_simplices(p):
                grads = []
                start = [slice(0, -1)] * p
                cur = list(start)
                prev = self.values[tuple(cur)]
                for axis in perm:
                    cur[axis] = slice(1, None)
                    nxt = self.values[tuple(cur)]
                    grads.append((nxt - prev) / self.delta[axis])
                    prev = nxt
                norm = np.sqrt(sum(g * g for g in grads))
                best = max(best, float(norm.max()))
            return best
        for verts, vals in self.simplices():
            g = np.linalg.solve(verts[1:] - verts[0], vals[1:] - vals[0])
            best = max(best, float(np.linalg.norm(g)))
        return best

    def to_grid_function(self, N, alpha=1.0, c=1.0):
        coords = lattice_coords(self.bounds, N)
        vals = self.evaluate(coords.reshape(-1, self.p)).reshape(coords.shape[:-1])
        return GridFunction(vals, alpha, c, self.bounds)

    def to_json(self):
        doc = {"p": self.p, "bounds": [list(b) for b in self.bounds], "pattern": self.pattern,
               "values": self.values.tolist()}
        if self.pattern != "kuhn":
            doc["simplices"] = [s.tolist() for s in self._simplices]
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        pattern = doc.get("simplices", "kuhn") if doc.get("pattern") != "kuhn" else "kuhn"
        return cls(np.array(doc["values"], dtype=float), doc["bounds"], pattern)


def build_interpolant(source, delta, pattern="kuhn", bounds=None) -> SimplicialInterpolant:
    """Interpolate ``source`` at the vertices of the ``delta``-spaced cube subdivision.

    ``source`` may be a :class:`GridFunction` (whose lattice must contain the
    ``delta`` lattice) or a callable on ``(m, p)`` arrays together with ``bounds``.
    """
    if isinstance(source, GridFunction):
        bounds = source.bounds
        side = source.hi - source.lo
    else:
        if bounds is None:
            raise InvalidArgument("bounds are required with a callable source")
        bounds = tuple((float(a), float(b)) for a, b in bounds)
        side = np.array([b - a for a, b in bounds])
    cells = side / float(delta)
    n = int(round(float(cells[0])))
    if n < 1 or np.any(np.abs(cells - n) > 1e-9 * n):
        raise InvalidArgument(f"delta={delta} does not divide the box evenly into cubes")
    p = len(bounds)
    axes = [np.linspace(a, b, n + 1) for a, b in bounds]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    if isinstance(source, GridFunction):
        ratio = (1 << source.N) / n
        if ratio != int(ratio):
            raise InvalidArgument("delta lattice is not a sublattice of the source lattice")
        r = int(ratio)
        vals = source.values[tuple(slice(None, None, r) for _ in range(p))]
    else:
        vals = np.asarray(source(coords.reshape(-1, p)), dtype=float).reshape(coords.shape[:-1])
    return SimplicialInterpolant(vals, bounds, pattern)
