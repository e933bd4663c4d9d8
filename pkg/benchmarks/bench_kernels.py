"""Time the compiled kernels against the numpy fallback on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import sys
import timeit

import numpy as np

from holderlevels import _pykernels as py

try:
    from holderlevels import _ckernels as cy
except ImportError:
    cy = None


def cases(rng):
    q = rng.random((200_000, 2))
    pts = rng.random((64, 2))
    vals = rng.random(64)
    hp = rng.random((3000, 2))
    hv = rng.random(3000)
    grid = rng.random((2049, 2049))
    return {
        "mcshane_min 200k x 64": (
            lambda: py.mcshane_min(q, pts, vals, 1.0, 0.5),
            lambda: cy.mcshane_min(q, pts, vals, 1.0, 0.5, 1)),
        "max_holder_quotient 3000": (
            lambda: py.max_holder_quotient(hp, hv, 0.5),
            lambda: cy.max_holder_quotient(hp, hv, 0.5)),
        "corner_minmax_2d 2049^2": (
            lambda: py.corner_minmax_2d(grid),
            lambda: cy.corner_minmax_2d(grid)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    rows = []
    for name, (fpy, fcy) in cases(rng).items():
        a, b = fpy(), fcy()
        same = all(np.allclose(x, y, rtol=1e-12, atol=1e-12) for x, y in
                   zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)))
        tpy = min(timeit.repeat(fpy, number=1, repeat=args.repeat))
        tcy = min(timeit.repeat(fcy, number=1, repeat=args.repeat))
        rows.append({"kernel": name, "python_s": tpy, "cython_s": tcy, "speedup": tpy / tcy, "agree": same})
        print(f"{name:28s} python {tpy * 1e3:9.2f} ms  cython {tcy * 1e3:9.2f} ms  x{tpy / tcy:6.1f}  "
              f"{'agree' if same else 'MISMATCH'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
