#!/usr/bin/env python3
"""Regenerate the shooting-parameter table for the profile family.

Runs the full chained solve up to the requested index and prints an aligned
table with the successive quotients next to their geometric limits. Mostly a
convenience wrapper over `python -m blowup spectrum` for eyeballing runs;
the CSV/JSON exports of the CLI are the machine-readable route.

    python scripts/reproduce_table.py --n-max 12
"""

import argparse
import math
import sys
import time

from blowup.model import derive_constants
from blowup.integrate import Tolerances
from blowup import shoot


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=7, help="odd exponent >= 7")
    ap.add_argument("--n-max", type=int, default=12, help="deepest index to solve")
    ap.add_argument("--rtol", type=float, default=1e-12)
    args = ap.parse_args(argv)

    params = derive_constants(args.p)
    tol = Tolerances(rtol=args.rtol, atol=args.rtol * 1e-2)

    t0 = time.perf_counter()
    fam = shoot.spectrum(args.n_max, params, tol)
    dt = time.perf_counter() - t0

    rows = fam.rows
    print(f"p = {params.p}, alpha = {params.alpha:.6f}, "
          f"b0 = {params.b0:.9f}, b_inf = {params.b_inf:.9f}")
    print(f"{args.n_max} members in {dt:.1f} s  "
          f"(worst mismatch {max(abs(r.mismatch) for r in rows):.1e})")
    print()
    print(f"{'n':>4} {'c_n':>18} {'b_n':>14} {'c_{n+1}/c_n':>12} "
          f"{'(b_{n+1}-b_inf)/(b_inf-b_n)':>28}")
    for i, r in enumerate(rows):
        if i + 1 < len(rows):
            dc = f"{rows[i + 1].c / r.c:12.4f}"
            db = f"{(rows[i + 1].b - params.b_inf) / (params.b_inf - r.b):28.4f}"
        else:
            dc, db = " " * 12, " " * 28
        print(f"{r.n:>4} {r.c:18.10g} {r.b:14.9f} {dc} {db}")
    print(f"{'inf':>4} {'':>18} {params.b_inf:14.9f} "
          f"{params.ratio_c:12.4f} {params.ratio_b:28.4f}")

    # quick sanity: the phase-spacing law ((p-1)/2) omega ln(c_{n+1}/c_n) -> pi
    if len(rows) >= 2:
        val = (0.5 * (params.p - 1) * params.omega
               * math.log(rows[-1].c / rows[-2].c) / math.pi)
        print(f"\nphase spacing at n={rows[-2].n}: {val:.6f}  (limit 1)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
