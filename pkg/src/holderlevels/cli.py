"""The ``hll`` command.

Exit status is 0 when everything ran and every verdict passed, 1 when an
experiment recorded a failing verdict, and 2 for usage errors, unreadable
inputs, or parameters outside a module's preconditions.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import kernels
from .errors import HolderLevelsError
from .fractals import SpongeSpec, ifs_rasterize, load_ifs, rasterize_sponge, sierpinski_preset, sufficient_kmax
from .grid import estimate_dimension, read_grid, write_grid
from .holder import (GridFunction, HolderSample, build_interpolant, mcshane_grid, mollify,
                     read_function, rescaled_copy, write_function)
from .levels import level_sweep, read_profile_csv, write_profile_csv
from .plotting import emit_plot

USAGE = 2
FAILED = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def parse_scales(text):
    """``"a:b"`` inclusive, or a comma list."""
    try:
        if ":" in text:
            a, b = (int(v) for v in text.split(":"))
            if b < a:
                raise ValueError
            return list(range(a, b + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad scales {text!r}; expected a:b") from None


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _existing(path):
    if not os.path.isfile(path):
        raise UsageError(f"input file not found: {path}")
    return path


def build_parser():
    p = _Parser(prog="hll", description="Level sets of Hölder functions on fractal grids.")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: $HLL_THREADS or 1)")
    p.add_argument("--config", default=None, help="key=value file; command-line flags override it")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fr = sub.add_parser("fractal", help="rasterize a fractal to an HLGRID01 file")
    frs = fr.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    sp = frs.add_parser("sponge")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k-max", type=int, default=None)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--out", required=True)
    ip = frs.add_parser("ifs")
    ip.add_argument("--file", default=None, help="IFS description; the Sierpiński preset if omitted")
    ip.add_argument("--depth", type=int, required=True)
    ip.add_argument("--n", type=int, required=True)
    ip.add_argument("--out", required=True)

    bd = sub.add_parser("boxdim", help="box-counting slope of a grid file")
    bd.add_argument("--in", dest="inp", required=True)
    bd.add_argument("--scales", type=parse_scales, default=None)
    bd.add_argument("--plot", default=None)

    fn = sub.add_parser("fn", help="build and transform Hölder functions")
    fns = fn.add_subparsers(dest="op", required=True, parser_class=_Parser)
    ex = fns.add_parser("extend", help="extend a JSON sample {points, values, alpha, c} to a lattice")
    ex.add_argument("--in", dest="inp", required=True)
    ex.add_argument("--n", type=int, required=True)
    ex.add_argument("--out", required=True)
    mo = fns.add_parser("mollify")
    mo.add_argument("--in", dest="inp", required=True)
    mo.add_argument("--r", type=float, required=True)
    mo.add_argument("--out", required=True)
    it = fns.add_parser("interp", help="piecewise-affine interpolant as JSON, or resampled with --n")
    it.add_argument("--in", dest="inp", required=True)
    it.add_argument("--delta", type=float, required=True)
    it.add_argument("--n", type=int, default=None)
    it.add_argument("--out", required=True)
    rs = fns.add_parser("rescale", help="plant rescaled copies on the Sierpiński preset")
    rs.add_argument("--n", type=int, required=True)
    rs.add_argument("--k", type=int, required=True)
    rs.add_argument("--grid", type=int, default=10)
    rs.add_argument("--alpha", type=float, default=0.75)
    rs.add_argument("--out", required=True)

    lv = sub.add_parser("level", help="level-set profiles")
    lvs = lv.add_subparsers(dest="op", required=True, parser_class=_Parser)
    sw = lvs.add_parser("sweep")
    sw.add_argument("--fn", required=True)
    sw.add_argument("--mask", required=True)
    sw.add_argument("--levels", type=int, default=256)
    sw.add_argument("--scales", type=parse_scales, required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--plot", default=None)

    xp = sub.add_parser("exp", help="run an audit harness")
    xps = xp.add_subparsers(dest="name", required=True, parser_class=_Parser)
    e = xps.add_parser("sponge")
    e.add_argument("--alpha", type=float, default=1.0)
    e.add_argument("--n", type=int, default=12)
    e.add_argument("--levels", type=int, default=256)
    e = xps.add_parser("upper-bound")
    e.add_argument("--mask", choices=("square", "sierpinski", "sponge"), default="square")
    e.add_argument("--n", type=int, default=10)
    e.add_argument("--scales", type=parse_scales, default=None)
    e.add_argument("--witnesses", type=int, default=8)
    e.add_argument("--levels", type=int, default=64)
    e.add_argument("--seed", type=int, default=1)
    e = xps.add_parser("slicing")
    e.add_argument("--mask", choices=("square", "sierpinski", "sponge"), default="sponge")
    e.add_argument("--n", type=int, default=10)
    e.add_argument("--eps", type=_floats, default=[0.25])
    e = xps.add_parser("monotone")
    e.add_argument("--mask", choices=("square", "sierpinski", "sponge"), default="square")
    e.add_argument("--n", type=int, default=8)
    e.add_argument("--alphas", type=_floats, default=[0.3, 0.6, 0.9])
    e.add_argument("--seed", type=int, default=0)
    e = xps.add_parser("copy")
    e.add_argument("--n", type=int, default=1)
    e.add_argument("--k", type=int, default=1)
    e.add_argument("--grid", type=int, default=10)
    e.add_argument("--alpha", type=float, default=0.75)
    for choice in xps.choices.values():
        choice.add_argument("--out-dir", default="runs")

    pl = sub.add_parser("plot", help="SVG of a grid's box-counting fit or of a profile CSV")
    pl.add_argument("--in", dest="inp", required=True)
    pl.add_argument("--scales", type=parse_scales, default=None)
    pl.add_argument("--out", required=True)
    return p


def read_config(path):
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(_existing(path), encoding="utf-8") as fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{num}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("_", "-")] = value
    return out


def _split_globals(argv):
    """Pull ``--threads`` and ``--config`` out wherever they appear."""
    rest, glob = [], {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        name = tok.split("=", 1)[0]
        if name in ("--threads", "--config"):
            if "=" in tok:
                glob[name] = tok.split("=", 1)[1]
            elif i + 1 < len(argv):
                glob[name] = argv[i + 1]
                i += 1
            else:
                raise UsageError(f"{name} needs a value")
        else:
            rest.append(tok)
        i += 1
    return rest, glob


def _with_config(argv, config):
    """Insert config values as flags right after the subcommand words, so later flags win."""
    if not config:
        return argv
    head = 0
    while head < len(argv) and not argv[head].startswith("-"):
        head += 1
    extra = []
    for key, value in config.items():
        if key in ("threads", "config"):
            continue
        extra += [f"--{key}", value]
    return argv[:head] + extra + argv[head:]


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _run(args):
    cmd = args.command
    if cmd == "fractal":
        if args.kind == "sponge":
            spec = SpongeSpec(k_max=args.k_max or sufficient_kmax(args.n), alpha=args.alpha)
            g = rasterize_sponge(spec, args.n)
        else:
            ifs = load_ifs(_existing(args.file)) if args.file else sierpinski_preset()
            g = ifs_rasterize(ifs, args.depth, args.n)
        write_grid(g, args.out)
        print(f"wrote {args.out}: N={g.N} cells={int(np.count_nonzero(g.cells))}")
        return 0
    if cmd == "boxdim":
        g = read_grid(_existing(args.inp))
        scales = args.scales or list(range(max(1, g.N - 6), g.N + 1))
        est = estimate_dimension(g, scales)
        print(f"slope={est.slope:.6f} residual={est.residual:.6f}")
        if args.plot:
            emit_plot(est, args.plot)
        return 0
    if cmd == "fn":
        return _run_fn(args)
    if cmd == "level":
        f = read_function(_existing(args.fn))
        mask = read_grid(_existing(args.mask))
        prof = level_sweep(f, mask, args.levels, args.scales)
        write_profile_csv(prof, args.out)
        if args.plot:
            emit_plot(prof, args.plot)
        print(f"wrote {args.out}: {prof.level_count} levels, {int(np.count_nonzero(~prof.empty))} nonempty")
        return 0
    if cmd == "exp":
        return _run_exp(args)
    if cmd == "plot":
        path = _existing(args.inp)
        if path.endswith(".csv"):
            emit_plot(read_profile_csv(path), args.out)
        else:
            g = read_grid(path)
            emit_plot(estimate_dimension(g, args.scales or list(range(max(1, g.N - 6), g.N + 1))), args.out)
        print(f"wrote {args.out}")
        return 0
    raise UsageError(f"unknown command {cmd}")


def _run_fn(args):
    if args.op == "extend":
        with open(_existing(args.inp), encoding="utf-8") as fh:
            d = json.load(fh)
        s = HolderSample(np.asarray(d["points"], dtype=float), np.asarray(d["values"], dtype=float),
                         float(d["alpha"]), float(d["c"]))
        f = mcshane_grid(s, args.n, d.get("bounds"))
        write_function(f, args.out)
    elif args.op == "mollify":
        write_function(mollify(read_function(_existing(args.inp)), args.r), args.out)
    elif args.op == "interp":
        src = read_function(_existing(args.inp))
        interp = build_interpolant(src, args.delta)
        if args.n is None:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(interp.to_json())
        else:
            write_function(interp.to_grid_function(args.n, src.alpha, src.c), args.out)
    elif args.op == "rescale":
        ifs = sierpinski_preset()
        f_n = build_interpolant(lambda x: 0.5 * (x[:, 0] + x[:, 1]), 2.0 ** -4, bounds=ifs.bounds)
        f_0 = GridFunction.from_callable(lambda x: 0.5 * x[:, 1], 2, args.grid, args.alpha, 0.5, ifs.bounds)
        res = rescaled_copy(f_n, f_0, ifs, args.n, args.k, args.grid, args.alpha)
        write_function(res.f_star, args.out)
        print(f"L={res.L} copies={len(res.placements)} c_n={res.c_n:.6f}")
        return 0
    print(f"wrote {args.out}")
    return 0


def _run_exp(args):
    from . import experiments as E
    if args.name == "sponge":
        rep = E.sponge_theorem(args.alpha, args.n, args.levels)
    elif args.name == "upper-bound":
        mask = E.MASKS[args.mask](args.n)
        scales = args.scales or list(range(max(1, args.n - 6), args.n + 1))
        ws = E.mcshane_witnesses(mask, args.witnesses, args.seed)
        if not ws:
            ws = [GridFunction(np.zeros((2 ** args.n + 1,) * 2), 1.0, 1.0, mask.bounds)]
        rep = E.upper_bound_audit(mask, ws, scales, args.levels, label=args.mask)
        rep.parameters["seed"] = args.seed
    elif args.name == "slicing":
        rep = E.slicing_audit(E.MASKS[args.mask](args.n), eps_list=args.eps, label=args.mask)
    elif args.name == "monotone":
        rep = E.monotonicity_sweep(E.MASKS[args.mask](args.n), args.alphas, args.seed, label=args.mask)
    else:
        rep = E.selfsimilar_copy_experiment(args.n, args.k, args.grid, args.alpha)
    run_dir = rep.write(args.out_dir)
    for key, v in sorted(rep.verdicts.items()):
        print(f"{'PASS' if v['passed'] else 'FAIL'} {key}: {v['measurement']}={rep.measurements[v['measurement']]}")
    print(f"report: {os.path.join(run_dir, 'report.json')}")
    return 0 if rep.passed else FAILED


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        rest, glob = _split_globals(argv)
        threads = glob.get("--threads")
        config = read_config(glob["--config"]) if "--config" in glob else {}
        if threads is None:
            threads = config.pop("threads", None) or os.environ.get("HLL_THREADS")
        if threads is not None:
            try:
                count = int(threads)
            except ValueError:
                count = 0
            if count < 1:
                raise UsageError(f"bad thread count {threads!r}; expected a positive integer")
            kernels.set_threads(count)
        args = parser.parse_args(_with_config(rest, config))
        return _run(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return USAGE
    except (HolderLevelsError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"hll: error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
