"""Two-sided shooting for the countable family of regular profiles.

A profile regular on the whole closed cone is determined by two one-parameter
families: center launches u(0) = c and light-cone launches u(1) = b.  Both are
integrated to a common matching radius rho_mid, giving two curves in the
(u, u') plane there,

    C0: c -> (u, u')(rho_mid)      spirals (as c -> inf) around the image
                                   P of the singular solution,
    C1: b -> (u, u')(rho_mid)      passes through P exactly at b = b_inf,

and profiles are transversal intersections C0(c_n) = C1(b_n).  Because C0
winds around P once per factor ratio_c in c, the intersections form the
geometric sequence the solver reproduces.

Bracketing is a polyline intersection scan of the two discretized curves
(log grid in c, 40 points per expected spiral turn), refinement a damped
two-variable Newton iteration on the scaled midpoint mismatch

    F(c, b) = ( u_C0 - u_C1,  (u'_C0 - u'_C1) / |u_singular'(rho_mid)| )

with a forward-difference Jacobian in (ln c, b).  Rows n >= 3 are seeded
from row n-1 through the closed-form ratios, so only the first turn of the
spiral is ever scanned.  Center launches with c above a threshold integrate
in the exact rescaled chart, which keeps the curve data well conditioned
for arbitrarily large c.

Solutions are classified by their nodal index: the number of zeros of
w = u/u_singular - 1, counted by sign changes on the dense trajectory and
cross-checked against the winding of the phase (w, rho w'); profile n has
exactly n + 1 zeros.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import ModelParams, du_singular
from .integrate import (
    TERM_REACHED_END,
    Tolerances,
    Trajectory,
    center_trajectory,
    lightcone_trajectory,
)
from . import diagnostics as _diag

__all__ = [
    "MidpointImage",
    "MergedTrajectory",
    "ShootingResult",
    "SpectrumResult",
    "ShootingError",
    "SearchError",
    "RESCALE_THRESHOLD",
    "center_image",
    "lightcone_image",
    "mismatch",
    "find_solution",
    "nodal_index",
    "w_zero_locations",
    "spectrum",
    "constant_solution_result",
    "sample_curves",
    "thread_map",
]

RESCALE_THRESHOLD = 10.0   # center launches above this c use the rescaled chart
SCAN_POINTS_PER_TURN = 40
MISMATCH_ACCEPT = 1e-9     # scaled norm below which a root is accepted


class ShootingError(RuntimeError):
    pass


class SearchError(ShootingError):
    """Bracketing or refinement failed; carries the scan trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace or []


def thread_map(fn, items):
    """Map preserving order; BLOWUP_THREADS > 1 enables a thread pool."""
    try:
        n = int(os.environ.get("BLOWUP_THREADS", "1"))
    except ValueError:
        n = 1
    items = list(items)
    if n <= 1 or len(items) < 4:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class MidpointImage:
    """(u, du) of one shot at the matching radius."""

    side: str          # "center" or "lightcone"
    param: float       # c or b
    rho_mid: float
    u: float
    du: float


@dataclass(eq=False)
class MergedTrajectory:
    """Center piece on [rho0, rho_mid] glued to the light-cone piece on [rho_mid, ~1]."""

    center: Trajectory
    lightcone: Trajectory
    rho_mid: float
    params: ModelParams

    @property
    def pieces(self) -> tuple[Trajectory, Trajectory]:
        return (self.center, self.lightcone)

    def profile_samples(self):
        rc, uc, dc = self.center.profile_samples()
        rl, ul, dl = self.lightcone.profile_samples()
        if rl[0] > rl[-1]:  # integrated downward from the cone
            rl, ul, dl = rl[::-1], ul[::-1], dl[::-1]
        keep = rl > rc[-1]
        return (np.concatenate([rc, rl[keep]]),
                np.concatenate([uc, ul[keep]]),
                np.concatenate([dc, dl[keep]]))

    def eval(self, rho):
        rho = np.asarray(rho, dtype=float)
        u = np.empty_like(rho)
        du = np.empty_like(rho)
        lo = rho <= self.rho_mid
        if lo.any():
            u[lo], du[lo] = self.center.eval(rho[lo])
        if (~lo).any():
            u[~lo], du[~lo] = self.lightcone.eval(rho[~lo])
        return u, du

    def rho_span(self):
        return (self.center.rho_span()[0], self.lightcone.rho_span()[1])


@dataclass(eq=False)
class ShootingResult:
    """One row of the profile family."""

    n: int
    c: float
    b: float
    mismatch: float
    zeros: int
    rho_mid: float
    trajectory: MergedTrajectory


@dataclass(eq=False)
class SpectrumResult:
    rows: list[ShootingResult]
    params: ModelParams
    rho_mid: float

    def delta_c(self, n: int) -> float:
        """c_{n+1}/c_n; defined while row n+1 exists."""
        return self.rows[n].c / self.rows[n - 1].c

    def delta_b(self, n: int) -> float:
        """(b_{n+1}-b_inf)/(b_inf-b_n)."""
        bi = self.params.b_inf
        return (self.rows[n].b - bi) / (bi - self.rows[n - 1].b)


# -- one-sided shots ---------------------------------------------------------


def _center_shot(c: float, rho_mid: float, params: ModelParams, tol: Tolerances,
                 store_dense: bool = False) -> Trajectory:
    traj = center_trajectory(c, rho_mid, params, tol, store_dense,
                             rescale_threshold=RESCALE_THRESHOLD)
    if traj.termination != TERM_REACHED_END:
        raise ShootingError(
            f"center shot c={c:g} stopped early ({traj.termination})")
    return traj


def _lightcone_shot(b: float, rho_mid: float, params: ModelParams, tol: Tolerances,
                    store_dense: bool = False) -> Trajectory:
    if not 0.0 < rho_mid < 1.0:
        raise ValueError("rho_mid must lie strictly inside the cone")
    traj = lightcone_trajectory(b, rho_mid, params, tol, store_dense)
    if traj.termination != TERM_REACHED_END:
        raise ShootingError(
            f"light-cone shot b={b:g} stopped early ({traj.termination})")
    return traj


def center_image(c: float, rho_mid: float, params: ModelParams,
                 tol: Tolerances = Tolerances()) -> MidpointImage:
    """Image of the center launch u(0)=c at the matching radius."""
    st = _center_shot(c, rho_mid, params, tol).endpoint()
    return MidpointImage("center", c, rho_mid, st.u, st.du)


def lightcone_image(b: float, rho_mid: float, params: ModelParams,
                    tol: Tolerances = Tolerances()) -> MidpointImage:
    """Image of the light-cone launch u(1)=b at the matching radius."""
    st = _lightcone_shot(b, rho_mid, params, tol).endpoint()
    return MidpointImage("lightcone", b, rho_mid, st.u, st.du)


def mismatch(c: float, b: float, rho_mid: float, params: ModelParams,
             tol: Tolerances = Tolerances()) -> np.ndarray:
    """Scaled two-component gap between the center and light-cone images."""
    ic = center_image(c, rho_mid, params, tol)
    il = lightcone_image(b, rho_mid, params, tol)
    dscale = abs(du_singular(params, rho_mid))
    return np.array([ic.u - il.u, (ic.du - il.du) / dscale])


# -- bracketing scan ---------------------------------------------------------


def _segment_intersections(pa, pb):
    """Parameter pairs (i+s, j+t) where polyline pa crosses polyline pb."""
    hits = []
    a0 = pa[:-1]
    a1 = pa[1:]
    for j in range(len(pb) - 1):
        q0, q1 = pb[j], pb[j + 1]
        d1 = a1 - a0
        d2 = q1 - q0
        den = d1[:, 0] * d2[1] - d1[:, 1] * d2[0]
        rx = q0[0] - a0[:, 0]
        ry = q0[1] - a0[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (rx * d2[1] - ry * d2[0]) / den
            t = (rx * d1[:, 1] - ry * d1[:, 0]) / -den
        ok = np.isfinite(s) & np.isfinite(t) & (s >= 0) & (s < 1) & (t >= 0) & (t < 1)
        for i in np.nonzero(ok)[0]:
            hits.append((i + s[i], j + t[i]))
    return hits


def _scan_seeds(params, tol, rho_mid, c_lo, c_hi, n_c, b_lo, b_hi, n_b):
    """Candidate (c, b) intersection seeds from discretized C0 and C1."""
    cs = np.exp(np.linspace(math.log(c_lo), math.log(c_hi), n_c))
    bs = np.linspace(b_lo, b_hi, n_b)
    dscale = abs(du_singular(params, rho_mid))

    def cimg(c):
        st = _center_shot(c, rho_mid, params, tol).endpoint()
        return (st.u, st.du / dscale)

    def limg(b):
        st = _lightcone_shot(b, rho_mid, params, tol).endpoint()
        return (st.u, st.du / dscale)

    pa = np.array(thread_map(cimg, cs))
    pb = np.array(thread_map(limg, bs))
    seeds = []
    for fi, fj in _segment_intersections(pa, pb):
        i = int(fi)
        c_seed = cs[i] * (cs[i + 1] / cs[i]) ** (fi - i)  # log interpolation
        j = int(fj)
        b_seed = bs[j] + (bs[j + 1] - bs[j]) * (fj - j)
        seeds.append((float(c_seed), float(b_seed)))
    seeds.sort()
    out = []
    for c, b in seeds:
        if out and abs(c / out[-1][0] - 1.0) < 1e-3 and abs(b - out[-1][1]) < 1e-3:
            continue
        out.append((c, b))
    return out, [(float(c),) + tuple(map(float, pt)) for c, pt in zip(cs, pa)]


# -- Newton refinement -------------------------------------------------------


class _MismatchCache:
    def __init__(self, params, rho_mid, tol):
        self.params = params
        self.rho_mid = rho_mid
        self.tol = tol
        self.dscale = abs(du_singular(params, rho_mid))
        self._center = {}
        self._cone = {}

    def center(self, c):
        if c not in self._center:
            st = _center_shot(c, self.rho_mid, self.params, self.tol).endpoint()
            self._center[c] = (st.u, st.du)
        return self._center[c]

    def cone(self, b):
        if b not in self._cone:
            st = _lightcone_shot(b, self.rho_mid, self.params, self.tol).endpoint()
            self._cone[b] = (st.u, st.du)
        return self._cone[b]

    def F(self, c, b):
        uc, dc = self.center(c)
        ul, dl = self.cone(b)
        return np.array([uc - ul, (dc - dl) / self.dscale])


def _newton_refine(c0, b0, params, rho_mid, tol, max_iter=30):
    """Damped Newton on F(ln c, b); returns (c, b, |F|) or raises SearchError."""
    cache = _MismatchCache(params, rho_mid, tol)
    target = max(1e-11, 20.0 * tol.rtol)
    s = math.log(c0)
    b = b0
    F = cache.F(math.exp(s), b)
    norm = float(np.hypot(*F))
    trace = [(c0, norm)]
    for _ in range(max_iter):
        if norm < target:
            break
        c = math.exp(s)
        # forward differences; the ln c step grows with c because the spiral
        # amplitude, and with it |dF/d ln c|, decays like c^{-(p-5)/4}
        ds = 1e-7 * max(1.0, (c / 100.0) ** 0.5)
        db = 1e-9
        Fc = cache.F(math.exp(s + ds), b)
        Fb = cache.F(c, b + db)
        J = np.column_stack([(Fc - F) / ds, (Fb - F) / db])
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            raise SearchError("singular mismatch Jacobian", trace)
        lam = 1.0
        improved = False
        while lam >= 1.0 / 512.0:
            s_t = s - lam * step[0]
            b_t = b - lam * step[1]
            if b_t > 1e-5 and abs(s_t - s) < 2.0:
                Ft = cache.F(math.exp(s_t), b_t)
                nt = float(np.hypot(*Ft))
                if nt < norm:
                    s, b, F, norm = s_t, b_t, Ft, nt
                    improved = True
                    break
            lam *= 0.5
        trace.append((math.exp(s), norm))
        if not improved:
            break
    if norm > MISMATCH_ACCEPT:
        raise SearchError(
            f"Newton stalled at scaled mismatch {norm:.3e} from seed c={c0:g}", trace)
    return math.exp(s), b, norm


# -- nodal classification ----------------------------------------------------


def w_zero_locations(traj, params: ModelParams) -> np.ndarray:
    """Zeros of w = u/u_singular - 1 in rho, refined through dense output."""
    zeros = []
    pieces = getattr(traj, "pieces", (traj,))
    for piece in pieces:
        t, w, _ = piece.w_samples()
        k = 1.0 if piece.chart == "rho" else piece._k()
        for i in range(len(t) - 1):
            wi, wj = w[i], w[i + 1]
            if wi == 0.0:
                zeros.append(float(t[i]) * k)
            elif (wi < 0.0 < wj) or (wj < 0.0 < wi):
                tz = brentq(lambda tq: float(piece.w_of_t(tq)[0]), t[i], t[i + 1],
                            xtol=1e-15, rtol=8.9e-16)
                zeros.append(float(tz) * k)
        if len(t) and w[-1] == 0.0:
            zeros.append(float(t[-1]) * k)
    zeros = sorted(zeros)
    # junction duplicates (a zero straddling the glue point) collapse to one;
    # distinct zeros are whole spiral turns apart, so a relative test is safe
    out = []
    for z in zeros:
        if out and z <= out[-1] * (1.0 + 1e-6):
            continue
        out.append(z)
    return np.asarray(out)


def nodal_index(traj, params: ModelParams) -> int:
    """Number of zeros of w, sign-change count cross-checked by phase winding."""
    n_sign = len(w_zero_locations(traj, params))
    n_phase = _diag.phase_zero_count(traj, params)
    if n_sign != n_phase:
        raise ShootingError(
            f"zero counts disagree (sign changes {n_sign}, phase winding {n_phase}); "
            "integration tolerance is likely too loose for this trajectory")
    return n_sign


# -- assembly ----------------------------------------------------------------


def _assemble(n_label, c, b, norm, params, rho_mid, tol) -> ShootingResult:
    cen = _center_shot(c, rho_mid, params, tol, store_dense=True)
    cone = _lightcone_shot(b, rho_mid, params, tol, store_dense=True)
    merged = MergedTrajectory(center=cen, lightcone=cone, rho_mid=rho_mid, params=params)
    zeros = nodal_index(merged, params)
    if n_label is not None and zeros != n_label + 1:
        raise SearchError(
            f"refined root (c={c:.6g}, b={b:.6g}) has {zeros} zeros, "
            f"wanted {n_label + 1}")
    return ShootingResult(n=zeros - 1, c=c, b=b, mismatch=norm, zeros=zeros,
                          rho_mid=rho_mid, trajectory=merged)


def constant_solution_result(params: ModelParams, tol: Tolerances = Tolerances(),
                             rho_mid: float = 0.5) -> ShootingResult:
    """The n = 0 member, u = b0, pushed through the standard pipeline."""
    b0 = params.b0
    F = mismatch(b0, b0, rho_mid, params, tol)
    return _assemble(0, b0, b0, float(np.hypot(*F)), params, rho_mid, tol)


def _scan_tol(tol: Tolerances) -> Tolerances:
    # bracketing only needs a few digits; the Newton stage re-integrates tightly
    return Tolerances(rtol=max(1e-8, tol.rtol), atol=max(1e-10, tol.atol),
                      max_steps=tol.max_steps, h_min=tol.h_min)


def _initial_rows(params, tol, rho_mid, want: int):
    """Scan the first spiral turns and return refined rows n = 1..want (<= 2)."""
    c_lo = 1.05 * params.b0 + 0.2
    c_hi = c_lo * params.ratio_c ** 2.6
    n_c = int(SCAN_POINTS_PER_TURN * 2.6) + 1
    seeds, trace = _scan_seeds(params, _scan_tol(tol), rho_mid,
                               c_lo, c_hi, n_c, 0.02, params.b0 - 1e-3, 81)
    found = {}
    for c_seed, b_seed in seeds:
        try:
            c, b, norm = _newton_refine(c_seed, b_seed, params, rho_mid, tol)
            res = _assemble(None, c, b, norm, params, rho_mid, tol)
        except (SearchError, ShootingError):
            continue
        if res.n not in found:
            found[res.n] = res
    missing = [k for k in range(1, want + 1) if k not in found]
    if missing:
        raise SearchError(
            f"initial scan over c in [{c_lo:.3g}, {c_hi:.3g}] found rows "
            f"{sorted(found)} but not {missing}", trace)
    return [found[k] for k in range(1, want + 1)]


def _next_row(prev: ShootingResult, params, tol) -> ShootingResult:
    """Row n+1 from row n through the closed-form geometric seeding."""
    rho_mid = prev.rho_mid
    c_seed = prev.c * params.ratio_c
    b_seed = params.b_inf - params.ratio_b * (prev.b - params.b_inf)
    try:
        c, b, norm = _newton_refine(c_seed, b_seed, params, rho_mid, tol)
        return _assemble(prev.n + 1, c, b, norm, params, rho_mid, tol)
    except SearchError:
        pass
    # fallback: local rescan of one spiral window around the seed
    spread = 0.45 * math.log(params.ratio_c)
    db = max(6.0 * abs(b_seed - params.b_inf), 1e-5)
    seeds, trace = _scan_seeds(
        params, _scan_tol(tol), rho_mid,
        c_seed * math.exp(-spread), c_seed * math.exp(spread), 40,
        max(params.b_inf - db, 1e-3), min(params.b_inf + db, params.b0 - 1e-6), 41)
    errs = []
    for c_s, b_s in seeds:
        try:
            c, b, norm = _newton_refine(c_s, b_s, params, rho_mid, tol)
            return _assemble(prev.n + 1, c, b, norm, params, rho_mid, tol)
        except (SearchError, ShootingError) as e:
            errs.append(str(e))
    raise SearchError(
        f"no refined root with {prev.n + 2} zeros near seed c={c_seed:.6g} "
        f"({len(seeds)} candidates tried)", trace)


def find_solution(n: int, params: ModelParams, tol: Tolerances = Tolerances(),
                  rho_mid: float = 0.5,
                  prev: ShootingResult | None = None) -> ShootingResult:
    """Profile n >= 1 (n + 1 zeros); chains upward from the first spiral turn.

    Passing `prev` (row n-1) skips the chain below it.
    """
    if n < 1:
        raise ValueError("find_solution labels start at n = 1; n = 0 is the "
                         "constant solution (constant_solution_result)")
    if prev is not None and prev.n == n - 1 and prev.rho_mid == rho_mid:
        return _next_row(prev, params, tol)
    rows = _initial_rows(params, tol, rho_mid, want=min(n, 2))
    row = rows[min(n, 2) - 1]
    while row.n < n:
        row = _next_row(row, params, tol)
    return row


def spectrum(n_max: int, params: ModelParams, tol: Tolerances = Tolerances(),
             rho_mid: float = 0.5) -> SpectrumResult:
    """Rows n = 1..n_max of the family, chained from the initial scan."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    rows = _initial_rows(params, tol, rho_mid, want=min(n_max, 2))
    while len(rows) < n_max:
        rows.append(_next_row(rows[-1], params, tol))
    return SpectrumResult(rows=rows, params=params, rho_mid=rho_mid)


def sample_curves(params: ModelParams, tol: Tolerances, rho_mid: float,
                  c_lo: float, c_hi: float, n_c: int,
                  b_lo: float, b_hi: float, n_b: int):
    """(C0 images, C1 images) for plotting and curve export; b grid always
    includes b_inf, whose image is the spiral limit point."""
    cs = np.exp(np.linspace(math.log(c_lo), math.log(c_hi), n_c))
    bs = np.unique(np.append(np.linspace(b_lo, b_hi, n_b), params.b_inf))
    c_imgs = thread_map(lambda c: center_image(c, rho_mid, params, tol), cs)
    b_imgs = thread_map(lambda b: lightcone_image(b, rho_mid, params, tol), bs)
    return c_imgs, b_imgs
