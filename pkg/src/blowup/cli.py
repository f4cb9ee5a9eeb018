"""Command-line front end.

Subcommands cover the family table (spectrum), single profiles (solve,
profile), the two shooting curves at a matching radius (curves), the
large-amplitude limit fit (limit), continuation past the light cone
(extend), derived constants (constants), and the invariant suite (check).

Output is CSV or JSON, written deterministically: fixed column order,
10 significant digits, newline line endings, rows in index order.  The
same configuration produces byte-identical files, so the artifacts can be
diffed across machines and the plots regenerated exactly.  Exit codes:
0 success, 1 computational failure, 2 usage error.  BLOWUP_THREADS caps
the worker pool used for spectrum scans and curve sampling.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import asymptotics as asy
from . import diagnostics as diag
from . import shoot
from .integrate import TERM_REACHED_END, Tolerances, center_trajectory
from .model import ModelParams, _derive_unchecked, derive_constants

__all__ = ["main", "RunConfig"]

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    """Validated knobs shared by the subcommands."""

    params: ModelParams
    tol: Tolerances
    rho_mid: float
    out: str
    format: str

    @staticmethod
    def from_args(args) -> "RunConfig":
        params = derive_constants(args.p)
        tol = Tolerances(rtol=args.rtol, atol=args.atol)
        rho_mid = getattr(args, "rho_mid", 0.5)
        if not 0.0 < rho_mid < 1.0:
            raise ValueError(f"--rho-mid must lie in (0, 1), got {rho_mid:g}")
        return RunConfig(params=params, tol=tol, rho_mid=rho_mid,
                         out=args.out, format=args.format)


# -- deterministic emission ----------------------------------------------------


def _num(x) -> str:
    return "%.10g" % float(x)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return _num(x)


def _csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_json(obj: dict, out: str) -> None:
    _emit(json.dumps(obj, indent=2) + "\n", out)


def _kv_payload(cfg: RunConfig, kind: str, fields: list[tuple[str, object]]) -> None:
    """Key-value output used by the scalar-report subcommands."""
    if cfg.format == "json":
        _emit_json({"kind": kind, "p": cfg.params.p, **dict(fields)}, cfg.out)
    else:
        _emit(_csv(["field", "value"], [[k, v] for k, v in fields]), cfg.out)


# -- subcommands ---------------------------------------------------------------


def cmd_constants(cfg: RunConfig, args) -> int:
    P = cfg.params
    _kv_payload(cfg, "constants", [
        ("p", P.p), ("alpha", P.alpha), ("b0", P.b0), ("b_inf", P.b_inf),
        ("omega", P.omega), ("ratio_c", P.ratio_c), ("ratio_b", P.ratio_b),
    ])
    return EXIT_OK


def _solve_chain(n: int, cfg: RunConfig) -> shoot.ShootingResult:
    if n == 0:
        return shoot.constant_solution_result(cfg.params, cfg.tol, cfg.rho_mid)
    return shoot.find_solution(n, cfg.params, cfg.tol, cfg.rho_mid)


def cmd_solve(cfg: RunConfig, args) -> int:
    res = _solve_chain(args.n, cfg)
    if cfg.format == "json":
        _emit_json({"kind": "solve", "p": cfg.params.p, "rho_mid": cfg.rho_mid,
                    "n": res.n, "c": res.c, "b": res.b,
                    "mismatch": res.mismatch, "zeros": res.zeros}, cfg.out)
    else:
        _emit(_csv(["n", "c_n", "b_n", "mismatch", "zeros"],
                   [[res.n, res.c, res.b, res.mismatch, res.zeros]]), cfg.out)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, args) -> int:
    P = cfg.params
    rows: list[list] = []
    results: list[shoot.ShootingResult] = []
    failed = False
    prev = None
    for n in range(1, args.n_max + 1):
        try:
            res = (shoot.find_solution(n, P, cfg.tol, cfg.rho_mid, prev=prev)
                   if prev is not None else
                   shoot.find_solution(n, P, cfg.tol, cfg.rho_mid))
        except (shoot.ShootingError, RuntimeError) as exc:
            print(f"spectrum: row {n} failed: {exc}", file=sys.stderr)
            rows.append([n, "FAIL", None, None, None, None, None])
            failed = True
            break
        results.append(res)
        rows.append([res.n, res.c, res.b, None, None, res.mismatch, res.zeros])
        if len(results) >= 2:
            bi = P.b_inf
            a, b = results[-2], results[-1]
            rows[-2][3] = b.c / a.c
            rows[-2][4] = (b.b - bi) / (bi - a.b)
        prev = res
    rows.append(["inf", None, P.b_inf, P.ratio_c, P.ratio_b, None, None])

    if cfg.format == "json":
        payload_rows = []
        for r in rows[:-1]:
            if r[1] == "FAIL":
                payload_rows.append({"n": r[0], "failed": True})
            else:
                payload_rows.append({
                    "n": r[0], "c": r[1], "b": r[2], "delta_c": r[3],
                    "delta_b": r[4], "mismatch": r[5], "zeros": r[6]})
        _emit_json({"kind": "spectrum", "p": P.p, "rho_mid": cfg.rho_mid,
                    "rows": payload_rows,
                    "limits": {"b_inf": P.b_inf, "ratio_c": P.ratio_c,
                               "ratio_b": P.ratio_b}}, cfg.out)
    else:
        _emit(_csv(["n", "c_n", "b_n", "delta_c", "delta_b", "mismatch", "zeros"],
                   rows), cfg.out)
    return EXIT_COMPUTE if failed else EXIT_OK


def cmd_profile(cfg: RunConfig, args) -> int:
    if args.samples < 2:
        raise ValueError("--samples must be at least 2")
    res = _solve_chain(args.n, cfg)
    traj = res.trajectory
    P = cfg.params
    lo, hi = traj.rho_span()
    rho = np.linspace(lo, hi, args.samples)
    u, du = traj.eval(rho)
    w = rho ** P.alpha * u / P.b_inf - 1.0
    pts = diag.phase_trajectory(traj, P)
    theta = np.interp(rho, [q.rho for q in pts], [q.theta for q in pts])
    H = diag.eval_energy(rho, u, du, P)
    Q = diag.eval_virial(rho, u, du, P)
    cols = zip(rho, u, du, w, theta, H, Q)
    if cfg.format == "json":
        _emit_json({"kind": "profile", "p": P.p, "n": res.n, "c": res.c,
                    "b": res.b, "rho_mid": cfg.rho_mid,
                    "columns": ["rho", "u", "du", "w", "Theta", "H", "Q"],
                    "data": [[float(v) for v in row] for row in cols]}, cfg.out)
    else:
        _emit(_csv(["rho", "u", "du", "w", "Theta", "H", "Q"],
                   [list(row) for row in cols]), cfg.out)
    return EXIT_OK


def cmd_curves(cfg: RunConfig, args) -> int:
    P = cfg.params
    if not (0 < args.c_lo < args.c_hi and 0 < args.b_lo < args.b_hi):
        raise ValueError("curve ranges must be positive and increasing")
    c_imgs, b_imgs = shoot.sample_curves(
        P, cfg.tol, cfg.rho_mid, args.c_lo, args.c_hi, args.n_c,
        args.b_lo, args.b_hi, args.n_b)
    rows = [[im.side, im.param, im.u, im.du] for im in (*c_imgs, *b_imgs)]
    if cfg.format == "json":
        _emit_json({"kind": "curves", "p": P.p, "rho_mid": cfg.rho_mid,
                    "points": [{"side": r[0], "param": r[1], "u_mid": r[2],
                                "du_mid": r[3]} for r in rows]}, cfg.out)
    else:
        _emit(_csv(["side", "param", "u_mid", "du_mid"], rows), cfg.out)
    return EXIT_OK


def cmd_limit(cfg: RunConfig, args) -> int:
    P = cfg.params
    if args.x_max <= 1.0:
        raise ValueError("--x-max must exceed 1")
    states = asy.integrate_limit_equation(args.x_max, P, cfg.tol)
    fit = asy.fit_limit_asymptotics(states, P)
    lam = (P.p - 5.0) / (2.0 * (P.p - 1.0))
    fields = [
        ("x_max", args.x_max),
        ("amplitude", fit.amplitude), ("phase", fit.phase),
        ("frequency", fit.frequency), ("decay", fit.decay),
        ("residual", fit.residual), ("n_periods", fit.n_periods),
        ("omega_predicted", P.omega), ("decay_predicted", lam),
    ]
    _kv_payload(cfg, "limit", fields)
    return EXIT_OK


def cmd_extend(cfg: RunConfig, args) -> int:
    if args.rho_max <= 1.0:
        raise ValueError("--rho-max must exceed 1")
    res = _solve_chain(args.n, cfg)
    rep = diag.extend_beyond_lightcone(res.b, cfg.params, args.rho_max, cfg.tol)
    fields = [
        ("n", res.n), ("b", rep.b), ("rho_max", rep.rho_max),
        ("u_final", rep.u_final), ("du_final", rep.du_final),
        ("min_u", rep.min_u), ("max_u", rep.max_u),
        ("min_decay_margin", rep.min_decay_margin),
        ("decay_margin_at_cone", rep.decay_margin_at_cone),
        ("monotone", rep.monotone), ("positive", rep.positive),
        ("below_b0", rep.below_b0), ("passed", rep.passed),
    ]
    _kv_payload(cfg, "extend", fields)
    return EXIT_OK if rep.passed else EXIT_COMPUTE


# -- invariant suite -----------------------------------------------------------


def _run_checks(cfg: RunConfig) -> list[tuple[str, bool, str]]:
    P = cfg.params
    tol = cfg.tol
    out: list[tuple[str, bool, str]] = []

    spec = shoot.spectrum(6, P, tol, cfg.rho_mid)
    rows = spec.rows

    ok = all(r.zeros == r.n + 1 for r in rows)
    out.append(("nodal_counts", ok,
                "zeros " + " ".join(str(r.zeros) for r in rows)))

    ok = all(r.b < P.b0 for r in rows) and all(r.c > P.b0 for r in rows)
    out.append(("cone_value_below_constant", ok,
                "max b %.6f vs b0 %.6f" % (max(r.b for r in rows), P.b0)))

    signs = [math.copysign(1.0, r.b - P.b_inf) for r in rows]
    ok = all(a * b < 0 for a, b in zip(signs[:-1], signs[1:]))
    out.append(("cone_value_alternation", ok,
                "signs " + " ".join("%+d" % int(s) for s in signs)))

    worst = 0.0
    ok = True
    for r in rows:
        rep = diag.monotonicity_report(r.trajectory, P)
        ok = ok and rep.passed
        worst = max(worst, max(c.max_rise_scaled for c in rep.checks.values()))
    out.append(("monotone_functionals", ok, "max scaled rise %.3g" % worst))

    qmax = -math.inf
    q0_excess = 0.0
    for r in rows:
        rho, u, du = r.trajectory.profile_samples()
        q = diag.eval_virial(rho, u, du, P)
        qmax = max(qmax, float(q.max()))
        # every term of Q carries rho^2 or rho^3, so at the launch radius the
        # value must sit at its cubic natural size, not merely below a fixed cap
        r0, u0 = float(rho[0]), float(u[0])
        ddu0 = (P.aa1 * u0 - u0 ** P.p) / 3.0
        scale = r0 ** 3 * (abs(3.0 * (5 - P.p) / (4.0 * (P.p - 1))
                               - 2.0 / (P.p - 1) ** 2) * u0 ** 2
                           + u0 ** (P.p + 1) / (P.p + 1) + abs(u0 * ddu0))
        q0_excess = max(q0_excess, abs(float(q[0])) / (100.0 * scale + 1e-10))
    ok = qmax <= 1e-12 and q0_excess <= 1.0
    out.append(("virial_nonpositive", ok,
                "max Q %.3g, center excess %.3g" % (qmax, q0_excess)))

    res0 = shoot.constant_solution_result(P, tol, cfg.rho_mid)
    zs = shoot.w_zero_locations(res0.trajectory, P)
    target = math.sqrt((P.p - 3.0) / (P.p + 1.0))
    err = abs(float(zs[0]) - target) if len(zs) == 1 else math.inf
    out.append(("constant_solution_zero", err <= 1e-9,
                "zero at %.12f, expected %.12f" % (zs[0], target)))

    ok = True
    detail = []
    for c in (5.0, 10.0, 50.0):
        rep = diag.first_crossing_report(c, P, tol)
        ok = ok and rep.passed
        detail.append("c=%g rho1=%.4f<=%.4f" % (c, rep.rho_first, rep.crossing_bound))
    out.append(("first_crossing_bound", ok, "; ".join(detail)))

    drep = diag.discriminant_report(P)
    ok = (abs(drep.closed_form - drep.value_at_v_star) <= 1e-12
          and drep.all_negative and drep.decreasing)
    out.append(("crossing_discriminant", ok,
                "value %.6f, all negative %s" % (drep.closed_form, drep.all_negative)))

    states = asy.integrate_limit_equation(asy.DEFAULT_X_MAX, P, tol)
    fit = asy.fit_limit_asymptotics(states, P)
    lam = (P.p - 5.0) / (2.0 * (P.p - 1.0))
    ok = (abs(fit.frequency - P.omega) <= 1e-3 and abs(fit.decay - lam) <= 5e-3)
    out.append(("limit_ringdown_fit", ok,
                "omega %.6f (pred %.6f), decay %.6f (pred %.6f)"
                % (fit.frequency, P.omega, fit.decay, lam)))

    tau, h = asy.limit_lyapunov(states, P)
    rise = float(np.max(np.diff(h)))
    out.append(("limit_lyapunov_monotone", rise <= 1e-12, "max rise %.3g" % rise))

    cfit = asy.solve_linearized_lightcone(1e-6, P, tol)
    ok = abs(cfit.frequency - P.omega) <= 1e-3 and abs(cfit.decay - lam) <= 5e-3
    out.append(("cone_linearization_fit", ok,
                "omega %.6f, decay %.6f" % (cfit.frequency, cfit.decay)))

    erep = diag.extend_beyond_lightcone(rows[0].b, P, 100.0, tol)
    out.append(("outward_extension", erep.passed,
                "u(100) %.3g, min margin %.3g" % (erep.u_final, erep.min_decay_margin)))

    dc = spec.delta_c(5)
    db = spec.delta_b(5)
    ok = (abs(dc / P.ratio_c - 1.0) < 0.05 and abs(db / P.ratio_b - 1.0) < 0.1)
    out.append(("quotient_convergence", ok,
                "delta_c %.4f -> %.4f, delta_b %.4f -> %.4f"
                % (dc, P.ratio_c, db, P.ratio_b)))

    P5 = _derive_unchecked(5)
    rng = np.random.default_rng(20260816)
    drift = 0.0
    ok = True
    for c in 0.3 + 2.2 * rng.random(10):
        traj = center_trajectory(float(c), 0.999, P5, tol)
        if traj.termination != TERM_REACHED_END:
            ok = False
            continue
        rho, u, du = traj.profile_samples()
        q = diag.eval_virial(rho, u, du, P5)
        drift = max(drift, float(np.max(np.abs(q - q[0]))) / (1.0 + abs(float(q[0]))))
    ok = ok and drift <= 1e-9
    out.append(("critical_case_first_integral", ok,
                "max scaled drift %.3g over 10 launches" % drift))

    return out


def cmd_check(cfg: RunConfig, args) -> int:
    checks = [(name, bool(ok), detail) for name, ok, detail in _run_checks(cfg)]
    if cfg.format == "json":
        _emit_json({"kind": "check", "p": cfg.params.p,
                    "passed": all(ok for _, ok, _ in checks),
                    "checks": [{"name": n, "passed": ok, "detail": d}
                               for n, ok, d in checks]}, cfg.out)
    else:
        _emit(_csv(["check", "passed", "detail"],
                   [[n, ok, d] for n, ok, d in checks]), cfg.out)
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_COMPUTE


# -- argument plumbing ---------------------------------------------------------


def _add_common(sp, rho_mid_default: float = 0.5) -> None:
    sp.add_argument("--p", type=int, default=7, help="nonlinearity exponent")
    sp.add_argument("--rho-mid", dest="rho_mid", type=float,
                    default=rho_mid_default, help="matching radius in (0, 1)")
    sp.add_argument("--rtol", type=float, default=1e-12)
    sp.add_argument("--atol", type=float, default=1e-14)
    sp.add_argument("--out", default="-", help="output path, - for stdout")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="blowup",
        description="Self-similar blowup profiles of the focusing wave "
                    "equation: family table, single profiles, shooting "
                    "curves, limit asymptotics, and invariant checks.",
        epilog="BLOWUP_THREADS caps the worker pool for scans and sampling.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("constants", help="derived constants for an exponent")
    _add_common(sp)
    sp.set_defaults(fn=cmd_constants)

    sp = sub.add_parser("solve", help="one member of the profile family")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=1, help="family index (0 = constant)")
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("spectrum", help="family table up to an index")
    _add_common(sp)
    sp.add_argument("--n-max", dest="n_max", type=int, default=10)
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("profile", help="sampled profile with deviation data")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--samples", type=int, default=512)
    sp.set_defaults(fn=cmd_profile)

    sp = sub.add_parser("curves", help="both shooting curves at the matching radius")
    _add_common(sp, rho_mid_default=0.1)
    sp.add_argument("--c-lo", dest="c_lo", type=float, default=1.0)
    sp.add_argument("--c-hi", dest="c_hi", type=float, default=1e4)
    sp.add_argument("--n-c", dest="n_c", type=int, default=120)
    sp.add_argument("--b-lo", dest="b_lo", type=float, default=0.02)
    sp.add_argument("--b-hi", dest="b_hi", type=float, default=0.87)
    sp.add_argument("--n-b", dest="n_b", type=int, default=120)
    sp.set_defaults(fn=cmd_curves)

    sp = sub.add_parser("limit", help="large-amplitude limit equation fit")
    _add_common(sp)
    sp.add_argument("--x-max", dest="x_max", type=float, default=asy.DEFAULT_X_MAX)
    sp.set_defaults(fn=cmd_limit)

    sp = sub.add_parser("extend", help="continue a profile past the light cone")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--rho-max", dest="rho_max", type=float, default=100.0)
    sp.set_defaults(fn=cmd_extend)

    sp = sub.add_parser("check", help="run the invariant suite")
    _add_common(sp)
    sp.set_defaults(fn=cmd_check)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
    except ValueError as exc:
        print(f"blowup: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(cfg, args)
    except asy.InsufficientSpanError as exc:
        print(f"blowup: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        print(f"blowup: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (shoot.ShootingError, diag.DegenerateTrajectoryError,
            RuntimeError) as exc:
        print(f"blowup: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
