"""Reproducible audit harnesses built from the grid, fractal, function, and level modules.

Every harness returns an :class:`ExperimentReport` whose parameters block records
all inputs and tolerances. Writing a report stores ``report.json`` and its CSV/SVG
artifacts in a directory named by a hash of the parameters.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidArgument, ResolutionTooLow
from .fractals import (SPONGE_BOUNDS, SpongeSpec, attractor_diameter, gap_tail_sum, ifs_points, ifs_rasterize,
                       minimal_k, rasterize_sponge, sierpinski_preset, sponge_interval_measure, sufficient_kmax)
from .grid import GridSet, cell_count, coarsen, estimate_dimension, slice_audit
from .holder import GridFunction, HolderSample, build_interpolant, mcshane_grid, rescaled_copy
from .levels import dstar_estimate, fubini_area, kappa, level_sweep, profile_csv_text
from .plotting import render

DIM_TOL = 0.1
PROXY_NOTE = ("witness-family proxy: values are measured on explicit witness functions, "
              "not on the generic (dense G-delta) quantity")


def _clean(obj):
    """Turn numpy scalars and tuples into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


@dataclass
class ExperimentReport:
    name: str
    parameters: dict
    measurements: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def measure(self, key, value):
        self.measurements[key] = value
        return value

    def verdict(self, key, passed, measurement, tolerance):
        """Record a verdict; ``tolerance`` must name an entry of ``parameters['tolerances']``."""
        if tolerance not in self.parameters.get("tolerances", {}):
            raise InvalidArgument(f"tolerance {tolerance!r} is not recorded in the parameters")
        if measurement not in self.measurements:
            raise InvalidArgument(f"measurement {measurement!r} has not been recorded")
        self.verdicts[key] = {"passed": bool(passed), "measurement": measurement, "tolerance": tolerance}

    @property
    def passed(self):
        return all(v["passed"] for v in self.verdicts.values())

    def run_id(self):
        digest = hashlib.sha256(canonical_json({"name": self.name, "parameters": self.parameters}).encode())
        return f"{self.name}-{digest.hexdigest()[:16]}"

    def to_dict(self):
        return {"name": self.name, "parameters": self.parameters, "measurements": self.measurements,
                "verdicts": self.verdicts, "artifacts": sorted(self.files)}

    def to_json(self):
        return canonical_json(self.to_dict())

    def write(self, root):
        """Write ``report.json`` and artifacts under ``root/<run id>``; returns that directory."""
        run_dir = os.path.join(root, self.run_id())
        os.makedirs(run_dir, exist_ok=True)
        for name, text in sorted(self.files.items()):
            with open(os.path.join(run_dir, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        with open(os.path.join(run_dir, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())
        return run_dir


def _slope_summary(profile, eps_tail=None):
    s = profile.nonempty_slopes()
    out = {"median_slope": float(np.median(s)) if s.size else 0.0,
           "max_slope": float(np.max(s)) if s.size else 0.0}
    if eps_tail is not None and s.size:
        out["tail_quantile"] = float(np.quantile(s, 1.0 - eps_tail))
    return out


# ---------------------------------------------------------------------------
# sponge

def sponge_theorem(alpha=1.0, N=12, level_count=256, taus=(0.0, 0.05, 0.1), p_m=1.0, columns=8,
                   scale_span=6):
    """Positive-area sponge: tilted-height witnesses must show level dimension about 1."""
    if N < 9:
        raise ResolutionTooLow(f"N={N} cannot resolve the widest gaps; need N >= 9")
    if not 0.0 < alpha <= 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1], got {alpha}")
    scales = list(range(max(1, N - scale_span), N + 1))
    k = minimal_k(alpha, p_m)
    p_mk = p_m * 2.0 ** (-k * k)
    tol = {"dstar_low": 1.0 - DIM_TOL, "dstar_high": 1.0, "fubini_min": 0.2, "column_factor": 0.9,
           "tail_factor": 1.0 / 1000.0}
    rep = ExperimentReport("sponge", {
        "alpha": alpha, "N": N, "level_count": level_count, "taus": list(taus), "p_m": p_m,
        "columns": columns, "scales": scales, "k_max": sufficient_kmax(N), "minimal_k": k,
        "tolerances": tol, "witnesses": "f(x, y) = y + tau * x",
        "note": PROXY_NOTE + "; for alpha = 0 the sponge value 0 is a documented statement, not measured",
    })
    spec = SpongeSpec(k_max=sufficient_kmax(N), alpha=alpha)
    mask = rasterize_sponge(spec, N)
    dim = estimate_dimension(mask, scales)
    rep.measure("mask_dimension", dim.slope)
    rep.measure("mask_cells", cell_count(mask))
    tail = gap_tail_sum(k, alpha)
    rep.measure("gap_tail_sum", tail)
    rep.measure("p_mk", p_mk)
    rep.verdict("minimal_k_condition", tail <= p_mk * tol["tail_factor"], "gap_tail_sum", "tail_factor")
    # columns [y0, y1] = [(j-1) 2^-k^2, (j+1) 2^-k^2] spread evenly over [0, 1/2]
    top = (1 << (k * k - 1)) - 1
    js = sorted({_clear_column(int(round(1 + i * (top - 1) / max(1, columns - 1))), k, top)
                 for i in range(columns)})
    rep.measure("column_indices", js)
    worst, worst_oracle = math.inf, math.inf
    for j in js:
        y0, y1 = (j - 1) * 2.0 ** (-k * k), (j + 1) * 2.0 ** (-k * k)
        lower, _ = sponge_interval_measure(y0, y1, k_exact=k)
        worst = min(worst, lower)
        worst_oracle = min(worst_oracle, (y1 - y0) - 2.0 * gap_tail_sum(k, alpha))
    rep.measure("column_image_measure_min", worst)
    rep.measure("column_oracle_bound", worst_oracle)
    rep.files["mask_fit.svg"] = render(dim)
    for tau in taus:
        tag = f"tau={tau:g}"
        f = GridFunction.from_callable(lambda x, t=tau: x[:, 1] + t * x[:, 0], 2, N, alpha, 1.0 + tau,
                                       SPONGE_BOUNDS)
        # the witness is a translation in y on each column, so the column image measure is the set measure
        col = rep.measure(f"column_measure[{tag}]", worst)
        rep.verdict(f"column_bound[{tag}]", col >= tol["column_factor"] * p_mk, f"column_measure[{tag}]",
                    "column_factor")
        area = rep.measure(f"fubini_area[{tag}]", fubini_area(f, mask))
        ok_area = area >= tol["fubini_min"]
        rep.verdict(f"fubini_area[{tag}]", ok_area, f"fubini_area[{tag}]", "fubini_min")
        prof = level_sweep(f, mask, level_count, scales)
        d = rep.measure(f"dstar[{tag}]", dstar_estimate(prof))
        for key, val in _slope_summary(prof).items():
            rep.measure(f"{key}[{tag}]", val)
        ok_d = tol["dstar_low"] <= d <= tol["dstar_high"]
        rep.verdict(f"dstar[{tag}]", ok_d, f"dstar[{tag}]", "dstar_low")
        rep.verdict(f"dstar_implies_area[{tag}]", (not ok_d) or ok_area, f"fubini_area[{tag}]", "fubini_min")
        rep.files[f"profile_{tag}.csv"] = profile_csv_text(prof)
        rep.files[f"profile_{tag}.svg"] = render(prof)
    return rep


def _clear_column(j, k, top):
    """First column index from ``j`` on whose interval misses every gap coarser than generation ``k``."""
    step = 2.0 ** (-k * k)
    for cand in list(range(j, top + 1)) + list(range(j - 1, 0, -1)):
        y0, y1 = (cand - 1) * step, (cand + 1) * step
        _, upper = sponge_interval_measure(y0, y1, k_exact=k - 1)
        if upper == y1 - y0:
            return cand
    raise InvalidArgument(f"no column of generation {k} avoids the coarser gaps")


# ---------------------------------------------------------------------------
# witnesses

def mcshane_witnesses(mask: GridSet, count=8, seed=0, alphas=(0.3, 0.5, 0.8, 1.0), sample_size=24,
                      points=None):
    """Seeded McShane extensions (constant 1) of random values on random points of the mask.

    Sample values are divided by their Hölder quotient when it exceeds 1, so
    every sample is valid for its exponent.
    """
    rng = np.random.default_rng(seed)
    if points is None:
        occ = mask.occupied()
        if occ.shape[0] == 0:
            return []
        pick = occ[rng.choice(occ.shape[0], min(sample_size, occ.shape[0]), replace=False)]
        points = mask.lo + (pick + 0.5) * mask.step
    out = []
    for i in range(count):
        alpha = alphas[i % len(alphas)]
        sel = rng.choice(len(points), min(sample_size, len(points)), replace=False)
        pts = np.asarray(points)[np.sort(sel)]
        vals = rng.random(len(pts))
        q = kernels.max_holder_quotient(pts, vals, alpha)
        vals = vals / max(1.0, q)
        out.append(mcshane_grid(HolderSample(pts, vals, alpha, 1.0), mask.N, mask.bounds, 1.0))
    return out


def upper_bound_audit(mask: GridSet, functions, scales, level_count=64, label="mask", eps_tail=0.25):
    """Every witness's dstar must stay within 0.1 of ``max(0, dim_B(mask) - 1)``."""
    scales = list(scales)
    tol = {"dim_slack": DIM_TOL}
    rep = ExperimentReport("upper-bound", {
        "mask": label, "N": mask.N, "scales": scales, "level_count": level_count,
        "witness_count": len(functions), "tolerances": tol, "note": PROXY_NOTE,
        "tail_fraction": eps_tail,
    })
    if len(functions) == 0:
        raise InvalidArgument("the function family is empty")
    empty = cell_count(mask) == 0
    dim = 0.0 if empty else estimate_dimension(mask, scales).slope
    rep.measure("mask_dimension", dim)
    bound = max(0.0, dim - 1.0)
    rep.measure("bound", bound)
    if empty:
        rep.measure("dstar_max", 0.0)
        rep.verdict("dstar_within_bound", True, "dstar_max", "dim_slack")
        return rep
    worst = -math.inf
    for i, f in enumerate(functions):
        prof = level_sweep(f, mask, level_count, scales)
        d = dstar_estimate(prof)
        rep.measure(f"dstar[{i}]", d)
        for key, val in _slope_summary(prof, eps_tail).items():
            rep.measure(f"{key}[{i}]", val)
        worst = max(worst, d)
        if i == 0:
            rep.files["profile_0.csv"] = profile_csv_text(prof)
            rep.files["profile_0.svg"] = render(prof)
    rep.measure("dstar_max", worst)
    rep.verdict("dstar_within_bound", worst <= bound + tol["dim_slack"], "dstar_max", "dim_slack")
    return rep


# ---------------------------------------------------------------------------
# slicing

def slicing_audit(mask: GridSet, axes=(0, 1), eps_list=(0.25,), scales=None, label="mask"):
    """Share of slices heavier than ``2**((s - 1 + 2 eps) N)`` against ``2**(-eps N)``."""
    if mask.p < 2:
        raise InvalidArgument("slicing needs p >= 2")
    scales = list(range(max(1, mask.N - 4), mask.N + 1)) if scales is None else sorted(scales)
    tol = {"decay": 1.0}
    rep = ExperimentReport("slicing", {"mask": label, "N": mask.N, "axes": list(axes),
                                       "eps": list(eps_list), "scales": scales, "tolerances": tol})
    if cell_count(mask) == 0:
        s = 1.0
    else:
        s = max(1.0, estimate_dimension(mask, scales).slope if len(scales) >= 3 else float(mask.p))
    rep.measure("s", s)
    finest = scales[-2:]
    for axis in axes:
        for eps in eps_list:
            ok = True
            for n in scales:
                g = coarsen(mask, mask.N - n)
                frac, bound = slice_audit(g, axis, eps, s)
                key = f"fraction[axis={axis},eps={eps:g},N={n}]"
                rep.measure(key, frac)
                rep.measure(f"bound[axis={axis},eps={eps:g},N={n}]", bound)
                if n in finest:
                    ok = ok and frac <= bound * tol["decay"]
            rep.verdict(f"decay[axis={axis},eps={eps:g}]", ok,
                        f"fraction[axis={axis},eps={eps:g},N={scales[-1]}]", "decay")
    return rep


# ---------------------------------------------------------------------------
# monotonicity

def monotonicity_sweep(mask: GridSet, alphas, sample_seed=0, count=4, sample_size=24, level_count=64,
                       scales=None, label="mask"):
    """Max dstar over one fixed witness family per exponent; must not drop by more than 0.1."""
    alphas = [float(a) for a in alphas]
    if any(not 0.0 < a <= 1.0 for a in alphas) or any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise InvalidArgument("alphas must increase within (0, 1]")
    scales = list(range(max(1, mask.N - 6), mask.N + 1)) if scales is None else list(scales)
    tol = {"monotone_slack": DIM_TOL}
    rep = ExperimentReport("monotone", {"mask": label, "N": mask.N, "alphas": alphas, "seed": sample_seed,
                                        "count": count, "sample_size": sample_size,
                                        "level_count": level_count, "scales": scales,
                                        "tolerances": tol, "note": PROXY_NOTE})
    rng = np.random.default_rng(sample_seed)
    occ = mask.occupied()
    if occ.shape[0] == 0:
        raise InvalidArgument("mask is empty")
    draws = []
    for _ in range(count):
        pick = occ[rng.choice(occ.shape[0], min(sample_size, occ.shape[0]), replace=False)]
        draws.append((mask.lo + (pick + 0.5) * mask.step, rng.random(len(pick))))
    maxima = []
    for a in alphas:
        best = -math.inf
        for i, (pts, raw) in enumerate(draws):
            q = kernels.max_holder_quotient(pts, raw, a)
            vals = raw / max(1.0, q)
            f = mcshane_grid(HolderSample(pts, vals, a, 1.0), mask.N, mask.bounds, 1.0)
            d = dstar_estimate(level_sweep(f, mask, level_count, scales))
            rep.measure(f"dstar[alpha={a:g},witness={i}]", d)
            best = max(best, d)
        maxima.append(best)
        rep.measure(f"dstar_max[alpha={a:g}]", best)
    drops = [maxima[i] - maxima[i + 1] for i in range(len(maxima) - 1)]
    rep.measure("largest_drop", max(drops) if drops else 0.0)
    rep.verdict("nondecreasing", (max(drops) if drops else 0.0) <= tol["monotone_slack"], "largest_drop",
                "monotone_slack")
    return rep


# ---------------------------------------------------------------------------
# self-similar copies

def selfsimilar_copy_experiment(n=1, k=1, N=10, alpha=0.75, beta=0.5, level_count=256, delta=0.25,
                                interp_delta=2.0 ** -4, pair_budget=10 ** 5, seed=0):
    """Plant rescaled copies of ``y`` into ``beta (x + y)`` on the gasket and check the construction."""
    ifs = sierpinski_preset()
    tol = {"claim2_slack": 1e-6, "exact": 0.0, "range_rel": 1e-12}
    scales = list(range(4, N + 1))
    rep = ExperimentReport("copy", {
        "ifs": "sierpinski", "n": n, "k": k, "N": N, "alpha": alpha, "beta": beta,
        "level_count": level_count, "delta": delta, "interp_delta": interp_delta,
        "pair_budget": pair_budget, "seed": seed, "scales": scales, "tolerances": tol,
        "f_n": "beta * (x + y), piecewise affine on the Kuhn subdivision",
        "f_0": "y / 2 sampled on the lattice", "note": PROXY_NOTE,
    })
    f_n = build_interpolant(lambda x: beta * (x[:, 0] + x[:, 1]), interp_delta, bounds=ifs.bounds)
    f_0 = GridFunction.from_callable(lambda x: 0.5 * x[:, 1], 2, N, alpha, 0.5, ifs.bounds)
    res = rescaled_copy(f_n, f_0, ifs, n, k, N, alpha)
    c_star = 0.5 * (1.0 + res.c_n)
    for key in ("L", "K_n", "c_n", "m_n", "M_n", "rho", "bound"):
        rep.measure(key, getattr(res, key))
    rep.measure("L_attempts", [a for a, _ in res.attempts])
    rep.measure("copies", len(res.placements))
    rep.verdict("copy_count", len(res.placements) == res.L - 1, "copies", "exact")
    # claim 1: strict on the copies, and the clamp keeps the whole lattice within the band
    fn_on_copies = res.f_n.evaluate(res.copy_points)
    c1 = float(np.max(np.abs(res.copy_values - fn_on_copies)))
    rep.measure("claim1_copy_sup", c1)
    rep.verdict("claim1_copies", c1 < res.bound, "claim1_copy_sup", "exact")
    grid_sup = float(np.max(np.abs(res.f_star.values - res.f_n.values)))
    rep.measure("claim1_grid_sup", grid_sup)
    rep.verdict("claim1_grid", grid_sup <= res.bound, "claim1_grid_sup", "exact")
    # claim 2 on attractor points: copies exhaustively, copies against everything, random pairs
    pts = ifs_points(ifs, N)
    vals = res.f_star.evaluate(pts)
    star_on_copies = res.f_star.evaluate(res.copy_points)
    q_copies = kernels.max_holder_quotient(res.copy_points, star_on_copies, alpha)
    q_cross = _cross_quotient(res.copy_points, star_on_copies, pts, vals, alpha)
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(pts), pair_budget)
    j = rng.integers(0, len(pts), pair_budget)
    d = np.sqrt(((pts[i] - pts[j]) ** 2).sum(axis=1))
    keep = d > 0
    q_rand = float(np.max(np.abs(vals[i] - vals[j])[keep] / d[keep] ** alpha)) if keep.any() else 0.0
    q2 = max(q_copies, q_cross, q_rand)
    rep.measure("claim2_quotient", q2)
    rep.measure("claim2_constant", c_star)
    rep.verdict("claim2", q2 <= c_star + tol["claim2_slack"], "claim2_quotient", "claim2_slack")
    # anchors
    anchors = np.array([pl.anchor for pl in res.placements])
    gap = float(np.max(np.abs(res.f_star.evaluate(anchors) - res.f_n.evaluate(anchors))))
    rep.measure("anchor_gap", gap)
    rep.verdict("anchors_exact", gap == 0.0, "anchor_gap", "exact")
    # disjointness and the size bracket
    sep = math.inf
    for a in range(len(res.placements)):
        for b in range(a + 1, len(res.placements)):
            pa, pb = res.placements[a], res.placements[b]
            sep = min(sep, float(np.linalg.norm(np.subtract(pa.anchor, pb.anchor))) - pa.diameter - pb.diameter)
    rep.measure("min_separation_margin", sep if math.isfinite(sep) else 0.0)
    rep.verdict("disjoint", sep > 0, "min_separation_margin", "exact")
    upper = (res.M_n - res.m_n) / (3.0 * res.L * res.K_n)
    q_min = ifs.q_min
    ok = all(upper > res.rho >= pl.diameter > q_min * res.rho for pl in res.placements)
    rep.measure("size_upper", upper)
    rep.measure("size_lower", q_min * res.rho)
    rep.measure("copy_diameters", [pl.diameter for pl in res.placements])
    rep.verdict("size_bracket", ok, "copy_diameters", "exact")
    # each copy's value range is the reference range scaled by q**alpha / 2
    ell0 = _range_on(lambda x: x[:, 1], pts)
    rep.measure("ell0", ell0)
    worst = 0.0
    for t, pl in enumerate(res.placements):
        sel = res.copy_index == t
        got = float(np.ptp(res.copy_values[sel]))
        want = 0.5 * pl.ratio ** alpha * ell0
        worst = max(worst, abs(got - want) / want)
    rep.measure("copy_range_rel_error", worst)
    rep.verdict("copy_range_scaling", worst <= tol["range_rel"], "copy_range_rel_error", "range_rel")
    # kappa on the copy windows, referenced to the dimension level of f_0* = 2 f_0
    mask = ifs_rasterize(ifs, N, N)
    ref = GridFunction.from_callable(lambda x: x[:, 1], 2, N, alpha, 1.0, ifs.bounds)
    ref_prof = level_sweep(ref, mask, level_count, scales)
    D = dstar_estimate(ref_prof)
    kappa0 = kappa(ref_prof, D, delta)
    prof = level_sweep(res.f_star, mask, level_count, scales)
    rep.measure("reference_dstar", D)
    rep.measure("kappa0", kappa0)
    rep.measure("kappa_copies", kappa(prof, D, delta, window=res.subranges()))
    rep.measure("kappa_lower_bound", 0.5 * kappa0 * 0.5 * (res.M_n - res.m_n) / (3.0 * res.L)
                * q_min ** alpha * ell0)
    rep.files["profile.csv"] = profile_csv_text(prof)
    rep.files["profile.svg"] = render(prof)
    rep.parameters["diameter"] = attractor_diameter(ifs)
    return rep


def _range_on(fn, pts):
    v = fn(pts)
    return float(v.max() - v.min())


def _cross_quotient(a_pts, a_vals, b_pts, b_vals, alpha):
    best = 0.0
    for start in range(0, len(b_pts), 1 << 14):
        bp = b_pts[start:start + (1 << 14)]
        bv = b_vals[start:start + (1 << 14)]
        d = np.sqrt(((a_pts[:, None, :] - bp[None, :, :]) ** 2).sum(axis=-1))
        dv = np.abs(a_vals[:, None] - bv[None, :])
        keep = d > 0
        if keep.any():
            best = max(best, float(np.max(dv[keep] / d[keep] ** alpha)))
    return best


# ---------------------------------------------------------------------------
# canned masks

def full_square_mask(N):
    return GridSet.full(2, N)


def sierpinski_mask(N):
    return ifs_rasterize(sierpinski_preset(), N, N)


def sponge_mask(N):
    return rasterize_sponge(SpongeSpec(k_max=sufficient_kmax(N)), N)


MASKS = {"square": full_square_mask, "sierpinski": sierpinski_mask, "sponge": sponge_mask}
