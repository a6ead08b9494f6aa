"""Classification of sonic parameters, bisection for the critical one, and
assembly of the full profile from the centre to the far field."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .config import SolverConfig
from .errors import (BracketInvalid, CenterMismatch, NonMonotoneDetected,
                     SonicSingularity, TargetOutsideImage, UnclassifiableRun)
from .integrate import (BOUND_GUARD_TRIPPED, HIT_ONE_THIRD, HIT_SONIC_LINE,
                        REACHED_ORIGIN_WINDOW, REACHED_TARGET, STEP_UNDERFLOW,
                        EventSpec, IntegrationOutcome, integrate_inner,
                        integrate_left, integrate_outer, sonic_handoff)
from .model import THIRD, SonicParameter, _as_param
from .origin import OriginSeries, eval_origin_series, extend_origin_series
from .profile import SolutionProfile
from .sonic import LP, SonicSeries, eval_series, extend_series

X, Y, Z = "X", "Y", "Z"


@dataclass(frozen=True)
class Classification:
    y_star: float
    label: str
    z_one_third: Optional[float]
    sonic_time_estimate: Optional[float]
    inf_omega: float
    event: str
    branch: str = LP

    def as_dict(self) -> dict:
        return {"y_star": self.y_star, "label": self.label, "z_one_third": self.z_one_third,
                "sonic_time": self.sonic_time_estimate, "inf_omega": self.inf_omega,
                "event": self.event, "branch": self.branch}


def _series_crossing(series: SonicSeries, h: float, tol: float = 1e-14):
    """Largest z in [1-h, 1] with omega(z) = 1/3 when omega(1-h) <= 1/3."""
    lo, hi = 1.0 - h, 1.0
    # omega(hi) = 1/y* >= 1/3 because y* <= 3 here; omega(lo) <= 1/3
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if eval_series(series, mid)[0].omega <= THIRD:
            lo = mid
        else:
            hi = mid
    return lo


def classify(p, cfg: SolverConfig = SolverConfig(), branch: str = LP,
             series: Optional[SonicSeries] = None) -> Classification:
    """Label y* as X, Y or Z from the leftward solution out of the sonic point."""
    p = _as_param(p)
    if series is None:
        series = extend_series(p, cfg.n_max, branch, cfg.r_cap)
    h = sonic_handoff(series, cfg.handoff)
    start = eval_series(series, 1.0 - h)[0]
    if start.omega <= THIRD:
        # the crossing happens inside the series neighbourhood
        zc = _series_crossing(series, h)
        return Classification(p.y_star, Y, zc, None, min(start.omega, THIRD), HIT_ONE_THIRD,
                              series.branch)
    spec = EventSpec(one_third=True, sonic_line=True, eps_event=cfg.eps_event,
                     origin_window=cfg.z_min, inner_guard=True, tol_guard=cfg.tol_guard)
    out = integrate_inner(p, series, cfg.z_min, spec, cfg.tol_ode, cfg.handoff,
                          include_series=False)
    inf_w = float(np.min(out.profile.omega))
    if out.event == HIT_ONE_THIRD:
        return Classification(p.y_star, Y, out.z_event, None, inf_w, out.event, series.branch)
    if out.event == STEP_UNDERFLOW:
        raise UnclassifiableRun(f"step underflow at z={out.profile.z[-1]:.6g} for y*={p.y_star}")
    label = X if inf_w > THIRD + cfg.delta_classify else Z
    st = out.z_event if out.event in (HIT_SONIC_LINE, BOUND_GUARD_TRIPPED) else None
    return Classification(p.y_star, label, None, st, inf_w, out.event, series.branch)


####################################################################
# bisection

@dataclass
class Bisection:
    lo: float
    hi: float
    iterations: int
    history: List[Tuple[float, str]] = field(default_factory=list)
    lo_class: Optional[Classification] = None
    hi_class: Optional[Classification] = None

    @property
    def width(self) -> float:
        return self.hi - self.lo


def bisect_y(lo: float, hi: float, tol_y: float, cfg: SolverConfig = SolverConfig(),
             check_ends: bool = True, lo_class=None, hi_class=None) -> Bisection:
    """Bisection on membership in Y, keeping lo outside Y and hi inside.

    tol_y = 0 runs until the midpoint is no longer representable between
    the two endpoints.
    """
    if check_ends or lo_class is None or hi_class is None:
        lo_class = classify(lo, cfg)
        hi_class = classify(hi, cfg)
    if lo_class.label == Y or hi_class.label != Y:
        raise BracketInvalid(f"need classify(lo) != Y and classify(hi) = Y, got "
                             f"{lo_class.label} at {lo} and {hi_class.label} at {hi}")
    res = Bisection(lo, hi, 0, [(lo, lo_class.label), (hi, hi_class.label)], lo_class, hi_class)
    while res.hi - res.lo > tol_y:
        mid = 0.5 * (res.lo + res.hi)
        if mid <= res.lo or mid >= res.hi:
            break
        c = classify(mid, cfg)
        res.history.append((mid, c.label))
        res.iterations += 1
        if c.label == Y:
            res.hi, res.hi_class = mid, c
        else:
            res.lo, res.lo_class = mid, c
    return res


def find_y_bar(bracket=(2.0, 3.0), tol_y: float = 1e-10, cfg: SolverConfig = SolverConfig()) -> float:
    return bisect_y(bracket[0], bracket[1], tol_y, cfg).hi


####################################################################
# left family

def left_state(p, rho0: float, z: float, cfg: SolverConfig = SolverConfig(),
               origin: Optional[OriginSeries] = None):
    """(rho, omega) of the centre-regular solution with rho(0)=rho0 at z."""
    p = _as_param(p)
    if origin is None:
        origin = extend_origin_series(p, rho0, cfg.n_max, cfg.r_cap)
    z_h = min(cfg.handoff, 0.5 * origin.radius)
    if z <= z_h:
        st = eval_origin_series(origin, z)[0]
        return st.rho, st.omega
    out = integrate_left(origin, z, EventSpec(sonic_line=True, eps_event=cfg.eps_event),
                         cfg.tol_ode, z_h=z_h, include_series=False)
    if out.event != REACHED_TARGET:
        raise SonicSingularity(f"left solution rho0={rho0} stops at z={out.z_event:.6g} "
                               f"before {z} ({out.event})")
    return float(out.profile.rho[-1]), float(out.profile.omega[-1])


def find_rho1(p, z0: float, target_rho: float, bracket_rho=None,
              cfg: SolverConfig = SolverConfig(), tol: float = 1e-13, samples: int = 5) -> float:
    """Central density whose left solution has rho = target_rho at z0."""
    p = _as_param(p)
    if bracket_rho is None:
        bracket_rho = (THIRD, math.sqrt(3.0) / (math.sqrt(2.0) * p.y_star * z0))
    lo, hi = float(bracket_rho[0]), float(bracket_rho[1])
    f = lambda r0: left_state(p, r0, z0, cfg)[0]
    flo, fhi = f(lo), f(hi)
    if target_rho == flo:
        return lo
    if not (flo <= target_rho <= fhi):
        raise TargetOutsideImage(f"target {target_rho} outside [{flo}, {fhi}] at z0={z0}")
    grid = np.linspace(lo, hi, samples + 2)
    vals = [flo] + [f(r) for r in grid[1:-1]] + [fhi]
    if np.any(np.diff(vals) <= 0):
        raise NonMonotoneDetected(f"rho_-({z0}; .) not increasing on [{lo}, {hi}]")
    i = int(np.searchsorted(vals, target_rho))
    lo, hi = grid[max(i - 1, 0)], grid[min(i, len(grid) - 1)]
    while hi - lo > 1e-15 * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        v = f(mid)
        if abs(v - target_rho) <= tol * abs(target_rho):
            return mid
        if v < target_rho:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


UPPER, LOWER, MATCHED = "Upper", "Lower", "Matched"


def right_state(p, z0: float, cfg: SolverConfig = SolverConfig()):
    """(rho, omega) at z0 of the leftward solution out of the sonic point."""
    p = _as_param(p)
    series = extend_series(p, cfg.n_max, LP, cfg.r_cap)
    h = sonic_handoff(series, cfg.handoff)
    if z0 >= 1.0 - h:
        st = eval_series(series, z0)[0]
        return st.rho, st.omega
    out = integrate_inner(p, series, z0, EventSpec(sonic_line=True, eps_event=cfg.eps_event),
                          cfg.tol_ode, cfg.handoff, include_series=False)
    if out.event not in (REACHED_TARGET, REACHED_ORIGIN_WINDOW):
        raise SonicSingularity(f"inner solution for y*={p.y_star} stops at "
                               f"z={out.z_event:.6g} before {z0}")
    return float(out.profile.rho[-1]), float(out.profile.omega[-1])


def match_left_right(p, z0: float, cfg: SolverConfig = SolverConfig()):
    """(delta_rho, delta_omega, verdict) comparing right and left solutions at z0."""
    p = _as_param(p)
    rr, wr = right_state(p, z0, cfg)
    r1 = find_rho1(p, z0, rr, cfg=cfg)
    rl, wl = left_state(p, r1, z0, cfg)
    dw = wr - wl
    if abs(dw) <= cfg.tol_match:
        verdict = MATCHED
    else:
        verdict = UPPER if dw > 0 else LOWER
    return rr - rl, dw, verdict


####################################################################
# full solution

@dataclass
class LPSolution:
    y_bar: float
    rho_center: float
    profile: SolutionProfile
    farfield_C: float
    bracket: Tuple[float, float]
    origin: OriginSeries
    sonic: SonicSeries
    inner: SolutionProfile
    left: SolutionProfile
    outer: SolutionProfile
    diagnostics: dict = field(default_factory=dict)

    def summary(self, invariant_report_path: Optional[str] = None,
                tolerances: Optional[dict] = None) -> dict:
        return {
            "y_bar": self.y_bar,
            "rho_center": self.rho_center,
            "farfield_C": self.farfield_C,
            "tolerances": tolerances or {},
            "event_log": self.profile.events,
            "invariant_report_path": invariant_report_path,
            "bracket": list(self.bracket),
            "diagnostics": self.diagnostics,
        }


def _inner_run(y: float, cfg: SolverConfig) -> IntegrationOutcome:
    series = extend_series(y, cfg.n_max, LP, cfg.r_cap)
    spec = EventSpec(sonic_line=True, eps_event=cfg.eps_event, origin_window=cfg.z_min)
    return integrate_inner(y, series, cfg.z_min, spec, cfg.tol_ode, cfg.handoff)


def richardson_center(prof: SolutionProfile, zs) -> Tuple[float, float]:
    """rho(0) assuming rho = rho* + a z^2 near the centre; returns (rho*, spread)."""
    z = sorted(zs, reverse=True)
    vals = [prof.dense(zz)[0][0] for zz in z]
    ests = []
    for (za, ra), (zb, rb) in zip(zip(z, vals), zip(z[1:], vals[1:])):
        ests.append(rb + (rb - ra) * zb * zb / (za * za - zb * zb))
    return ests[-1], (abs(ests[-1] - ests[-2]) if len(ests) > 1 else 0.0)


def overlap_disagreement(left: SolutionProfile, inner: SolutionProfile, lo: float, hi: float,
                         n: int = 41):
    """Max relative difference in rho and omega on a log grid over [lo, hi]."""
    zs = np.geomspace(lo, hi, n)
    dr = dw = 0.0
    worst = None
    for z in zs:
        (ra, wa), _ = inner.dense(z)
        (rb, wb), _ = left.dense(z)
        er, ew = abs(ra - rb) / abs(rb), abs(wa - wb) / abs(wb)
        if max(er, ew) > max(dr, dw):
            worst = float(z)
        dr, dw = max(dr, er), max(dw, ew)
    return {"rho": dr, "omega": dw, "max": max(dr, dw), "z_worst": worst,
            "window": [lo, hi], "points": n}


def _concat(parts: List[SolutionProfile], y_star, events, rho_center, C) -> SolutionProfile:
    z, r, w, dr, dw, segs = [], [], [], [], [], []
    last = -np.inf
    for pr in parts:
        pr = pr.ascending()
        m = pr.z > last + 1e-15
        z.append(pr.z[m]); r.append(pr.rho[m]); w.append(pr.omega[m])
        dr.append(pr.drho[m]); dw.append(pr.domega[m])
        segs.extend(pr.segments)
        if m.any():
            last = pr.z[m][-1]
    return SolutionProfile(y_star, np.concatenate(z), np.concatenate(r), np.concatenate(w),
                           np.concatenate(dr), np.concatenate(dw), segs, events,
                           rho_center=rho_center, farfield_C=C)


def solve_lp(cfg: SolverConfig = SolverConfig()) -> LPSolution:
    """Critical parameter, centre value, and the assembled profile on [0, z_max]."""
    br = bisect_y(cfg.bracket[0], cfg.bracket[1], cfg.tol_y, cfg)
    coarse = (br.lo, br.hi)
    if cfg.refine_y_bar:
        # the z^-3 mode near the centre amplifies any error in y*, so the
        # bracket is narrowed to the last representable double
        br2 = bisect_y(br.lo, br.hi, 0.0, cfg, check_ends=False,
                       lo_class=br.lo_class, hi_class=br.hi_class)
        iters = br.iterations + br2.iterations
        br = br2
    else:
        iters = br.iterations
    y_bar = br.hi
    p = SonicParameter(y_bar)
    sonic = extend_series(p, cfg.n_max, LP, cfg.r_cap)
    inner_out = _inner_run(y_bar, cfg)
    inner = inner_out.profile
    zr = tuple(cfg.richardson)
    if min(zr) < inner.z.min():
        raise CenterMismatch(f"inner solution ends at z={inner.z.min():.3g} above the "
                             f"extrapolation points {zr}")
    rho_c, rho_spread = richardson_center(inner, zr)
    origin = extend_origin_series(p, rho_c, cfg.n_max, cfg.r_cap)
    z_h = min(cfg.handoff, 0.5 * origin.radius)
    left_out = integrate_left(origin, cfg.z_match, EventSpec(sonic_line=True,
                              eps_event=cfg.eps_event), cfg.tol_ode, z_h=z_h)
    left = left_out.profile
    if left_out.event != REACHED_TARGET:
        raise CenterMismatch(f"centre solution stops at z={left_out.z_event} ({left_out.event})")
    overlap = overlap_disagreement(left, inner, min(zr), cfg.z_match)
    outer, C = integrate_outer(p, sonic, cfg.z_max, cfg.tol_outer, cfg.handoff,
                               tol_guard=cfg.tol_guard)
    inner_part = inner.restrict(cfg.z_match, 1.0)
    inner_part.segments = [s for s in inner_part.segments if s.hi > cfg.z_match]
    left_part = left.restrict(0.0, cfg.z_match)
    events = ([{"event": "Bisection", "lo": br.lo, "hi": br.hi, "iterations": iters,
                "coarse_bracket": list(coarse)}]
              + [dict(e, segment="inner") for e in inner.events]
              + [dict(e, segment="centre") for e in left.events])
    prof = _concat([left_part, inner_part, outer], y_bar, events, rho_c, C)
    k_right = {f"{z:g}": (inner.dense(z)[0][1] - THIRD) / z ** 2 for z in zr}
    k_full = {f"{z:g}": (prof.dense(z)[0][1] - THIRD) / z ** 2 for z in zr}
    diag = {
        "bisection_iterations": iters,
        "coarse_bracket": list(coarse),
        "bracket": [br.lo, br.hi],
        "bracket_width_coarse": coarse[1] - coarse[0],
        "rho_center_spread": rho_spread,
        "origin_radius": origin.radius,
        "origin_handoff": z_h,
        "sonic_radius": sonic.radius,
        "sonic_handoff": sonic_handoff(sonic, cfg.handoff),
        "overlap": overlap,
        "inner_event": inner_out.as_dict(),
        "K_inner_run": k_right,
        "K_profile": k_full,
        "z_one_third_hi": br.hi_class.z_one_third if br.hi_class else None,
    }
    sol = LPSolution(y_bar, rho_c, prof, C, (br.lo, br.hi), origin, sonic, inner, left,
                     outer, diag)
    if overlap["max"] > cfg.tol_match:
        err = CenterMismatch(f"overlap disagreement {overlap['max']:.3e} exceeds "
                             f"{cfg.tol_match:g} (worst at z={overlap['z_worst']:.3g})")
        err.solution = sol
        raise err
    return sol
