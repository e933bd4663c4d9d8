"""Standalone SVG plots with byte-stable output."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgument
from .grid import DimEstimate
from .levels import LevelProfile

W, H = 480, 360
MARGIN = 50


def _fmt(v):
    return f"{v:.3f}"


def _scaler(lo, hi, a, b):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _frame(title, xlabel, ylabel, xr, yr):
    x0, x1, y0, y1 = MARGIN, W - 20, H - MARGIN, 30
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W // 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) // 2}" y="{H - 12}" text-anchor="middle" font-size="11">{xlabel}</text>',
        f'<text x="14" y="{(y0 + y1) // 2}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 14 {(y0 + y1) // 2})">{ylabel}</text>',
        f'<text x="{x0}" y="{y0 + 14}" font-size="9" text-anchor="middle">{xr[0]:.4g}</text>',
        f'<text x="{x1}" y="{y0 + 14}" font-size="9" text-anchor="middle">{xr[1]:.4g}</text>',
        f'<text x="{x0 - 4}" y="{y0}" font-size="9" text-anchor="end">{yr[0]:.4g}</text>',
        f'<text x="{x0 - 4}" y="{y1 + 4}" font-size="9" text-anchor="end">{yr[1]:.4g}</text>',
    ]
    return out, _scaler(xr[0], xr[1], x0, x1), _scaler(yr[0], yr[1], y0, y1)


def dim_svg(est: DimEstimate) -> str:
    xs = np.array(est.scales, dtype=float)
    counts = np.array(est.counts, dtype=float)
    if xs.size == 0:
        raise InvalidArgument("nothing to plot")
    ys = np.log2(np.maximum(counts, 1.0))
    xr = (float(xs.min()), float(xs.max()))
    yr = (float(ys.min()), float(ys.max()))
    parts, sx, sy = _frame("box-counting fit", "N", "log2 count", xr, yr)
    # least-squares line through the points, drawn between the extreme scales
    xm = xs.mean()
    intercept = float(ys.mean() - est.slope * xm)
    ya, yb = est.slope * xr[0] + intercept, est.slope * xr[1] + intercept
    parts.append(f'<line x1="{_fmt(sx(xr[0]))}" y1="{_fmt(sy(ya))}" x2="{_fmt(sx(xr[1]))}" '
                 f'y2="{_fmt(sy(yb))}" stroke="steelblue" stroke-width="1.5"/>')
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3" fill="crimson"/>')
    parts.append(f'<text x="{MARGIN + 10}" y="44" font-size="12">slope={est.slope:.4f}</text>')
    parts.append(f'<text x="{MARGIN + 10}" y="58" font-size="10">residual={est.residual:.4f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def profile_svg(profile: LevelProfile) -> str:
    keep = ~profile.empty
    if not np.any(keep):
        raise InvalidArgument("profile has no nonempty levels")
    r = profile.levels
    s = np.where(keep, profile.slopes, 0.0)
    half = profile.spacing / 2.0
    xr = (float(r.min() - half), float(r.max() + half))
    top = max(1.0, float(np.nanmax(profile.slopes)))
    parts, sx, sy = _frame("level-set slopes", "r", "slope", xr, (0.0, math.ceil(top * 4) / 4))
    pts = []
    for ri, si in zip(r, s):
        pts.append(f"{_fmt(sx(ri - half))},{_fmt(sy(si))}")
        pts.append(f"{_fmt(sx(ri + half))},{_fmt(sy(si))}")
    parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="steelblue" stroke-width="1.2"/>')
    for ri in r[~keep]:
        parts.append(f'<line x1="{_fmt(sx(ri))}" y1="{_fmt(sy(0.0))}" x2="{_fmt(sx(ri))}" '
                     f'y2="{_fmt(sy(0.0) - 6)}" stroke="gray"/>')
    parts.append(f'<text x="{MARGIN + 10}" y="44" font-size="11">levels={profile.level_count} '
                 f'nonempty={int(np.count_nonzero(keep))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render(data) -> str:
    if isinstance(data, DimEstimate):
        return dim_svg(data)
    if isinstance(data, LevelProfile):
        return profile_svg(data)
    raise InvalidArgument(f"cannot plot {type(data).__name__}")


def emit_plot(data, path):
    """Write the SVG for a :class:`DimEstimate` or :class:`LevelProfile`; nothing is written on error."""
    text = render(data)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
