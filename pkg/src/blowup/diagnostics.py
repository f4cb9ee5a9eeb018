"""Structural diagnostics for profile trajectories.

Everything here checks a claim the solver's output is supposed to satisfy:
monotone functionals along the radius, the winding of the deviation phase,
first-crossing bounds for large center amplitudes, negativity of the
crossing discriminant, and decay of the continuation beyond the cone.
The checks consume trajectories (single pieces or center/cone merges) and
never run the shooting iteration themselves.

Deviation phase.  With w = u/u_singular - 1 the pair (w, rho w') traces a
spiral around the origin; Theta = atan2(rho w', w) unwrapped along the
radius decreases through pi/2 - k pi exactly at the zeros of w, so the
nodal index can be read off as a winding count, independently of sign
changes on the sample grid.  Angle steps larger than pi/2 are subdivided
through dense output before unwrapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import ModelParams
from .integrate import (
    TERM_REACHED_END,
    Tolerances,
    Trajectory,
    center_trajectory,
    lightcone_trajectory,
)

__all__ = [
    "PhasePoint",
    "MonotoneCheck",
    "MonotonicityReport",
    "FirstCrossingReport",
    "DiscriminantReport",
    "ExtensionReport",
    "DegenerateTrajectoryError",
    "eval_energy",
    "eval_virial",
    "eval_deviation_energy",
    "monotonicity_report",
    "phase_trajectory",
    "phase_zero_count",
    "phase_at",
    "first_crossing_report",
    "crossing_discriminant",
    "discriminant_report",
    "extend_beyond_lightcone",
    "singular_mode_amplitude",
]

R_DEGENERATE = 1e-12   # phase radius below which the spiral is meaningless


class DegenerateTrajectoryError(ValueError):
    """The deviation pair (w, rho w') passed through the origin."""


# -- pointwise functionals ---------------------------------------------------


def eval_energy(rho, u, du, params: ModelParams):
    """Interior energy; non-increasing in rho for rho^2 <= 2(p-1)/(p+3)."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    p = params.p
    return (0.5 * (1.0 - rho**2) * du**2 + u**(p + 1) / (p + 1)
            - 0.5 * params.aa1 * u**2)


def eval_virial(rho, u, du, params: ModelParams):
    """Weighted virial; vanishes at the center, non-increasing inside the
    cone, and exactly conserved in the critical case p = 5."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    p = params.p
    q2 = 3.0 * (5 - p) / (4.0 * (p - 1)) - 2.0 / (p - 1) ** 2
    omc = 1.0 - rho**2
    return (0.5 * omc * rho**3 * du**2 + 0.5 * rho**2 * omc * u * du
            + q2 * rho**3 * u**2 + rho**3 * u**(p + 1) / (p + 1))


def eval_deviation_energy(rho, u, du, params: ModelParams):
    """Energy of v = u/u_singular; global minimum -(p-3)/(p^2-1) at v = 1.

    d/drho = -(kappa - 1) rho v'^2 with kappa = 2(p-3)/(p-1) > 1, so this
    decreases along every trajectory, on both sides of the cone.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("deviation energy needs rho > 0")
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    p = params.p
    al = params.alpha
    ra = rho**al
    v = ra * u / params.b_inf
    rv = ra * (rho * du + al * u) / params.b_inf   # rho v'
    a1m = al * (1.0 - al)
    return 0.5 * (1.0 - rho**2) * rv**2 + a1m * (v**(p + 1) / (p + 1) - 0.5 * v**2)


_FUNCTIONALS = {
    "energy": eval_energy,
    "virial": eval_virial,
    "deviation_energy": eval_deviation_energy,
}


@dataclass(frozen=True)
class MonotoneCheck:
    name: str
    n_samples: int
    initial: float
    final: float
    max_rise_scaled: float       # max (v[i+1]-v[i]) / (1+|v[i]|), < 0 if strictly falling
    max_drift_scaled: float      # max |v[i]-v[0]| / (1+|v[0]|), conservation metric
    min_value: float
    max_value: float
    passed: bool


@dataclass(frozen=True)
class MonotonicityReport:
    checks: dict[str, MonotoneCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())


def monotonicity_report(traj, params: ModelParams,
                        functionals=("energy", "virial", "deviation_energy"),
                        drift_tol: float = 1e-9) -> MonotonicityReport:
    """Evaluate the requested functionals along increasing rho and flag any
    rise above drift_tol * (1 + |value|)."""
    rho, u, du = traj.profile_samples()
    order = np.argsort(rho)
    rho, u, du = rho[order], u[order], du[order]
    checks = {}
    for name in functionals:
        vals = _FUNCTIONALS[name](rho, u, du, params)
        rises = (vals[1:] - vals[:-1]) / (1.0 + np.abs(vals[:-1]))
        drift = np.abs(vals - vals[0]) / (1.0 + abs(float(vals[0])))
        max_rise = float(rises.max()) if len(rises) else 0.0
        checks[name] = MonotoneCheck(
            name=name, n_samples=len(vals),
            initial=float(vals[0]), final=float(vals[-1]),
            max_rise_scaled=max_rise,
            max_drift_scaled=float(drift.max()),
            min_value=float(vals.min()), max_value=float(vals.max()),
            passed=max_rise <= drift_tol)
    return MonotonicityReport(checks=checks)


# -- phase of the deviation --------------------------------------------------


@dataclass(frozen=True)
class PhasePoint:
    rho: float
    w: float
    rw: float       # rho * w'
    theta: float    # unwrapped, decreasing through pi/2 - k pi at zeros of w
    R: float        # hypot(w, rho*w')


def _principal(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _pieces(traj):
    return getattr(traj, "pieces", (traj,))


def _piece_chain(piece: Trajectory):
    """(t ascending in rho, w, rw, k) with k the rho-per-t factor."""
    t, w, rw = piece.w_samples()
    if len(t) > 1 and t[0] > t[-1]:
        t, w, rw = t[::-1], w[::-1], rw[::-1]
    k = 1.0 if piece.chart == "rho" else piece._k()
    return t, w, rw, k


def phase_trajectory(traj, params: ModelParams,
                     max_step: float = 0.5 * math.pi) -> list[PhasePoint]:
    """Unwrapped deviation phase along rho, subdividing wide angle steps."""
    pts: list[PhasePoint] = []
    theta = None

    def push(rho, w, rw, th):
        R = math.hypot(w, rw)
        if R < R_DEGENERATE:
            raise DegenerateTrajectoryError(
                f"phase radius {R:.2e} at rho={rho:.6g}; the deviation "
                "trajectory is indistinguishable from the singular solution")
        pts.append(PhasePoint(rho=rho, w=w, rw=rw, theta=th, R=R))

    for piece in _pieces(traj):
        t, w, rw, k = _piece_chain(piece)

        def advance(t_a, th_a, t_b, w_b, rw_b, depth=0):
            d = _principal(math.atan2(rw_b, w_b) - th_a)
            if abs(d) <= max_step:
                push(t_b * k, w_b, rw_b, th_a + d)
                return th_a + d
            if depth >= 48:
                raise DegenerateTrajectoryError(
                    f"phase refinement stalled near rho={t_b * k:.6g}")
            t_m = 0.5 * (t_a + t_b)
            w_m, rw_m = piece.w_of_t(t_m)
            th_m = advance(t_a, th_a, t_m, float(w_m), float(rw_m), depth + 1)
            return advance(t_m, th_m, t_b, w_b, rw_b, depth + 1)

        start = math.atan2(rw[0], w[0])
        if theta is None:
            theta = start
            push(t[0] * k, float(w[0]), float(rw[0]), theta)
        else:
            # junction: same geometric point up to the matching mismatch
            theta = theta + _principal(start - theta)
        for i in range(len(t) - 1):
            theta = advance(t[i], theta, t[i + 1], float(w[i + 1]), float(rw[i + 1]))
    return pts


def _level_index(theta: float) -> int:
    # number of half-integer levels pi/2 - k pi at or below theta
    return math.floor((theta - 0.5 * math.pi) / math.pi)


def phase_zero_count(traj, params: ModelParams) -> int:
    """Zeros of w counted as gross crossings of the levels pi/2 - k pi."""
    pts = phase_trajectory(traj, params)
    levels = [_level_index(q.theta) for q in pts]
    return int(sum(abs(b - a) for a, b in zip(levels[:-1], levels[1:])))


def phase_at(traj, params: ModelParams, rho: float) -> float:
    """Unwrapped phase interpolated at a radius inside the trajectory span."""
    pts = phase_trajectory(traj, params)
    rhos = np.array([q.rho for q in pts])
    thetas = np.array([q.theta for q in pts])
    if not rhos[0] <= rho <= rhos[-1]:
        raise ValueError(f"rho={rho:g} outside sampled span "
                         f"[{rhos[0]:g}, {rhos[-1]:g}]")
    return float(np.interp(rho, rhos, thetas))


# -- first crossing at large center amplitude --------------------------------


@dataclass(frozen=True)
class FirstCrossingReport:
    c: float
    shrink: float            # d = (p-1)/p
    crossing_bound: float    # (b_inf/(d c))^{(p-1)/2}
    rho_first: float
    rw_first: float
    min_w_after: float
    floor: float             # -2 alpha
    passed: bool


def first_crossing_report(c: float, params: ModelParams,
                          tol: Tolerances = Tolerances(),
                          rho_end: float = 0.999) -> FirstCrossingReport:
    """Locate the first zero of w for a center launch and compare with the
    closed-form bound; also record the later floor of w."""
    p = params.p
    d = (p - 1.0) / p
    if c * d <= params.b0:
        raise ValueError(f"bound needs c > b0 p/(p-1) = {params.b0 / d:.6g}")
    bound = (params.b_inf / (d * c)) ** ((p - 1) / 2.0)
    traj = center_trajectory(c, rho_end, params, tol, store_dense=True)
    if traj.termination != TERM_REACHED_END:
        raise RuntimeError(f"center trajectory c={c:g} stopped early "
                           f"({traj.termination})")
    t, w, rw = traj.w_samples()
    k = 1.0 if traj.chart == "rho" else traj._k()
    idx = np.nonzero((w[:-1] < 0.0) & (w[1:] >= 0.0))[0]
    if len(idx) == 0:
        raise RuntimeError(f"no crossing of the singular solution below "
                           f"rho={rho_end} for c={c:g}")
    i = int(idx[0])
    tz = brentq(lambda tq: float(traj.w_of_t(tq)[0]), t[i], t[i + 1],
                xtol=1e-15, rtol=8.9e-16)
    rho1 = float(tz) * k
    rw1 = float(traj.w_of_t(tz)[1])
    after = [q.w for q in phase_trajectory(traj, params) if q.rho > rho1]
    min_w = float(min(after)) if after else float("nan")
    floor = -2.0 * params.alpha
    passed = (rho1 < bound * (1.0 + 1e-6)
              and 0.0 < rw1 < params.alpha
              and min_w > floor)
    return FirstCrossingReport(c=c, shrink=d, crossing_bound=bound, rho_first=rho1,
                        rw_first=rw1, min_w_after=min_w, floor=floor, passed=passed)


# -- crossing discriminant ---------------------------------------------------


def crossing_discriminant(v, params: ModelParams):
    """Discriminant of the quadratic controlling transversality of radial
    crossings at deviation amplitude v, times (p-1)^2."""
    p = params.p
    v = np.asarray(v, dtype=float)
    s = np.zeros_like(v)
    vk = np.ones_like(v)
    for _ in range(1, p):
        vk = vk * v
        s = s + vk
    return (p - 5.0) ** 2 - 8.0 * (p - 3.0) * s


@dataclass(frozen=True)
class DiscriminantReport:
    p: int
    v_star: float
    value_at_v_star: float
    closed_form: float
    all_negative: bool
    decreasing: bool


def discriminant_report(params: ModelParams, n_grid: int = 2001) -> DiscriminantReport:
    """Scan the discriminant on [v*, 1], v* = (p-5)/(p-1); spiraling toward
    the singular solution is transversal when it stays negative there."""
    p = params.p
    v_star = (p - 5.0) / (p - 1.0)
    closed = ((2.0 * p * p - 8.0 * p + 6.0) * ((p - 5.0) / (p - 1.0)) ** p
              - p * p + 6.0 * p - 5.0)
    grid = np.linspace(v_star, 1.0, n_grid)
    vals = crossing_discriminant(grid, params)
    return DiscriminantReport(
        p=p, v_star=v_star,
        value_at_v_star=float(vals[0]),
        closed_form=float(closed),
        all_negative=bool(np.all(vals < 0.0)),
        decreasing=bool(np.all(np.diff(vals) < 0.0)))


# -- continuation beyond the cone --------------------------------------------


@dataclass(frozen=True)
class ExtensionReport:
    b: float
    rho_max: float
    u_final: float
    du_final: float
    min_u: float
    max_u: float
    min_decay_margin: float   # min of rho u' + (alpha+1)/2 u, positive = slow decay
    decay_margin_at_cone: float   # series value (p-1) b^p / 4
    monotone: bool
    positive: bool
    below_b0: bool
    passed: bool
    trajectory: Trajectory


def extend_beyond_lightcone(b: float, params: ModelParams, rho_max: float = 100.0,
                            tol: Tolerances = Tolerances()) -> ExtensionReport:
    """Continue a cone value 0 < b < b0 outward and check the decay regime:
    u positive, strictly decreasing, below the constant solution, with
    rho u' + (alpha+1)/2 u staying positive (decay slower than the
    self-similar rate)."""
    if not 0.0 < b < params.b0:
        raise ValueError("outward decay requires 0 < b < b0")
    if rho_max <= 1.0:
        raise ValueError("rho_max must exceed the cone")
    traj = lightcone_trajectory(b, rho_max, params, tol, store_dense=True)
    if traj.termination != TERM_REACHED_END:
        raise RuntimeError(f"outward continuation stopped early ({traj.termination})")
    rho, u, du = traj.profile_samples()
    f = rho * du + 0.5 * (params.alpha + 1.0) * u
    p = params.p
    f_cone = (p - 1.0) / 4.0 * b**p
    monotone = bool(np.all(du < 0.0))
    positive = bool(np.all(u > 0.0))
    below = bool(np.all(u < params.b0))
    f_pos = bool(np.all(f > 0.0))
    return ExtensionReport(
        b=b, rho_max=rho_max,
        u_final=float(u[-1]), du_final=float(du[-1]),
        min_u=float(u.min()), max_u=float(u.max()),
        min_decay_margin=float(f.min()),
        decay_margin_at_cone=f_cone,
        monotone=monotone, positive=positive, below_b0=below,
        passed=monotone and positive and below and f_pos,
        trajectory=traj)


# -- singular component near the cone ----------------------------------------


def singular_mode_amplitude(traj, params: ModelParams, n_points: int = 8) -> float:
    """Extrapolated size of the singular mode at the cone.

    In the compactified chart sigma = (1-rho)^alpha the derivative variable
    theta = sigma u' tends to 0 for regular solutions and to a finite value
    when the singular component is present; a linear fit in sigma over the
    samples closest to the cone estimates that limit.
    """
    pieces = _pieces(traj)
    rho, u, du = pieces[-1].profile_samples()
    mask = rho < 1.0
    rho, du = rho[mask], du[mask]
    if len(rho) < n_points or rho.max() < 0.98:
        raise ValueError("trajectory has too few samples near the cone")
    order = np.argsort(rho)[-n_points:]
    sig = (1.0 - rho[order]) ** params.alpha
    th = sig * du[order]
    coef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(sig), sig]),
                               th, rcond=None)
    return abs(float(coef[0]))
