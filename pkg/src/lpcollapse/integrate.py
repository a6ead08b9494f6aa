"""Dormand-Prince 5(4) integration between the singular points.

The stepper is a plain-float implementation of the classical DOPRI5
tableau with PI step control, its quartic continuous extension, and
sign-change events located by bisection on that extension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import GuardViolation, InvalidParameter, NonFiniteState, SonicSingularity
from .model import THIRD, FlowState, SonicParameter, _as_param
from .origin import OriginSeries, eval_origin_series
from .profile import DopriSegment, SeriesSegment, SolutionProfile
from .sonic import SonicSeries, eval_series, handoff_offset

REACHED_TARGET = "ReachedTarget"
HIT_ONE_THIRD = "HitOneThird"
HIT_SONIC_LINE = "HitSonicLine"
REACHED_ORIGIN_WINDOW = "ReachedOriginWindow"
STEP_UNDERFLOW = "StepUnderflow"
BOUND_GUARD_TRIPPED = "BoundGuardTripped"

TOL_ODE = 1e-11
TOL_OUTER = 1e-13   # outer run is cheap; tight enough for the flux identity
EPS_EVENT = 1e-10
EVENT_TOL = 1e-12
TOL_GUARD = 1e-8
H_MIN_REL = 1e-14
MAX_STEPS = 200000

# Dormand-Prince 5(4) coefficients
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)
D1, D3, D4, D5, D6, D7 = (-12715105075 / 11282082432, 87487479700 / 32700410799,
                          -10690763975 / 1880347072, 701980252875 / 199316789632,
                          -1453857185 / 822651844, 69997945 / 29380423)


class Reject(Exception):
    """Raised by a RHS wrapper when a stage leaves the admissible region."""


@dataclass
class Event:
    name: str
    g: Callable[[float, Sequence[float]], float]   # event fires where g <= 0
    detail: str = ""


@dataclass
class RawRun:
    z: List[float]
    y: List[List[float]]
    f: List[List[float]]
    segments: List[DopriSegment]
    termination: str
    event: Optional[Event] = None
    steps: int = 0
    rejections: int = 0


def _finite(v):
    return all(math.isfinite(x) for x in v)


def _initial_step(fun, z0, y0, f0, direction, rtol, atol, span):
    sc = [atol + rtol * abs(a) for a in y0]
    d0 = max(abs(a) / s for a, s in zip(y0, sc))
    d1 = max(abs(a) / s for a, s in zip(f0, sc))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, abs(span))
    try:
        y1 = [a + direction * h0 * b for a, b in zip(y0, f0)]
        f1 = fun(z0 + direction * h0, y1)
        d2 = max(abs(a - b) / s for a, b, s in zip(f1, f0, sc)) / h0
    except Reject:
        return direction * h0 * 1e-3
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return direction * min(100 * h0, h1, abs(span))


def _locate(seg: DopriSegment, g, za, zb, tol=EVENT_TOL):
    """Bisection for the sign change of g between za (g>0) and zb (g<=0)."""
    for _ in range(200):
        if abs(zb - za) <= tol:
            break
        zm = 0.5 * (za + zb)
        if zm == za or zm == zb:
            break
        y, _ = seg(zm)
        if g(zm, y) > 0:
            za = zm
        else:
            zb = zm
    return za, zb


def dopri5(fun, z0: float, y0, z_end: float, rtol: float = TOL_ODE,
           atol: Optional[float] = None, events: Sequence[Event] = (),
           h0: Optional[float] = None, max_steps: int = MAX_STEPS) -> RawRun:
    """Integrate y' = fun(z, y) from z0 towards z_end.

    `fun` may raise Reject for states outside the admissible region; the
    step is then retried with a smaller h.
    """
    if atol is None:
        atol = 1e-6 * rtol
    y = [float(a) for a in y0]
    if not _finite(y) or not math.isfinite(z0):
        raise NonFiniteState(f"non-finite start ({z0}, {y})")
    direction = 1.0 if z_end > z0 else -1.0
    z = float(z0)
    try:
        k1 = fun(z, y)
    except Reject as exc:
        raise SonicSingularity(f"start state not admissible at z={z}") from exc
    run = RawRun([z], [list(y)], [list(k1)], [], REACHED_TARGET)
    for ev in events:
        if ev.g(z, y) <= 0:
            run.termination, run.event = ev.name, ev
            return run
    h = h0 if h0 is not None else _initial_step(fun, z, y, k1, direction, rtol, atol, z_end - z)
    h = direction * abs(h)
    facold = 1e-4
    beta, expo1, safe = 0.04, 0.2 - 0.04 * 0.75, 0.9
    facc1, facc2 = 1 / 0.2, 1 / 10.0
    last_rejected = False
    n = len(y)
    while True:
        if run.steps + run.rejections >= max_steps:
            run.termination = STEP_UNDERFLOW
            return run
        if abs(h) < H_MIN_REL * max(abs(z), 1e-300):
            run.termination = STEP_UNDERFLOW
            return run
        last = False
        if (z + h - z_end) * direction >= 0:
            h = z_end - z
            last = True
        try:
            k2 = fun(z + C2 * h, [y[i] + h * A21 * k1[i] for i in range(n)])
            k3 = fun(z + C3 * h, [y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in range(n)])
            k4 = fun(z + C4 * h, [y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                                  for i in range(n)])
            k5 = fun(z + C5 * h, [y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i]
                                              + A54 * k4[i]) for i in range(n)])
            k6 = fun(z + h, [y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                         + A64 * k4[i] + A65 * k5[i]) for i in range(n)])
            yn = [y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i]
                              + A76 * k6[i]) for i in range(n)]
            k7 = fun(z + h, yn)
        except (Reject, ZeroDivisionError, OverflowError):
            run.rejections += 1
            h *= 0.25
            last_rejected = True
            continue
        err = 0.0
        for i in range(n):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                     + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            err = max(err, abs(e) / sc)
        if not math.isfinite(err) or not _finite(yn):
            run.rejections += 1
            h *= 0.25
            last_rejected = True
            continue
        fac11 = err ** expo1 if err > 0 else 0.0
        if err <= 1.0:
            # accepted
            dy = [yn[i] - y[i] for i in range(n)]
            bspl = [h * k1[i] - dy[i] for i in range(n)]
            seg = DopriSegment(
                z, h, list(y), dy, bspl,
                [dy[i] - h * k7[i] - bspl[i] for i in range(n)],
                [h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                      + D7 * k7[i]) for i in range(n)])
            zn = z + h if not last else z_end
            run.steps += 1
            run.segments.append(seg)
            # events over the step
            hit = None
            for ev in events:
                if ev.g(zn, yn) <= 0:
                    za, zb = _locate(seg, ev.g, z, zn)
                    if hit is None or (zb - hit[1]) * direction < 0:
                        hit = (ev, zb)
            if hit is not None:
                ev, zb = hit
                if zb != zn:
                    ye, fe = seg(zb)
                    run.z.append(zb)
                    run.y.append(ye)
                    run.f.append(fe)
                else:
                    run.z.append(zn)
                    run.y.append(list(yn))
                    run.f.append(list(k7))
                run.termination, run.event = ev.name, ev
                return run
            run.z.append(zn)
            run.y.append(list(yn))
            run.f.append(list(k7))
            if last:
                return run
            fac = fac11 / facold ** beta
            fac = max(facc2, min(facc1, fac / safe))
            hnew = h / fac
            facold = max(err, 1e-4)
            if last_rejected:
                hnew = direction * min(abs(hnew), abs(h))
            last_rejected = False
            z, y, k1 = zn, yn, k7
            h = hnew
        else:
            run.rejections += 1
            h = h / min(facc1, fac11 / safe)
            last_rejected = True


####################################################################
# problem-level wrappers

@dataclass(frozen=True)
class EventSpec:
    one_third: bool = False
    sonic_line: bool = False
    eps_event: float = EPS_EVENT
    origin_window: Optional[float] = None
    inner_guard: bool = False
    left_guard_rho0: Optional[float] = None
    outer_guard: bool = False
    tol_guard: float = TOL_GUARD


@dataclass
class IntegrationOutcome:
    event: str
    profile: SolutionProfile
    z_event: Optional[float] = None
    indicator_value: Optional[float] = None
    reason: str = ""
    steps: int = 0
    rejections: int = 0

    @property
    def final_state(self) -> FlowState:
        return FlowState(float(self.profile.z[-1]), float(self.profile.rho[-1]),
                         float(self.profile.omega[-1]))

    def as_dict(self) -> dict:
        return {"event": self.event, "z_event": self.z_event,
                "indicator": self.indicator_value, "reason": self.reason,
                "steps": self.steps, "rejections": self.rejections}


def _make_rhs(y2, sign_d, eps):
    """RHS restricted to one side of the sonic line (sign_d = +1 inside)."""
    def fun(z, v):
        r, w = v[0], v[1]
        if z <= 0.0:
            raise Reject
        zw = z * w
        den = 1.0 - y2 * zw * zw
        if den * sign_d <= eps:
            raise Reject
        q = 2.0 * y2 * zw * (r - w) / den
        return [-q * r, (1.0 - 3.0 * w) / z + q * w]
    return fun


def _build_events(spec: EventSpec, y_star: float) -> List[Event]:
    y2 = y_star * y_star
    ev = []
    if spec.one_third:
        ev.append(Event(HIT_ONE_THIRD, lambda z, v: v[1] - THIRD))
    if spec.sonic_line:
        eps = spec.eps_event
        ev.append(Event(HIT_SONIC_LINE, lambda z, v: 1.0 - y2 * (z * v[1]) ** 2 - eps))
    tg = spec.tol_guard
    if spec.inner_guard:
        ev.append(Event(BOUND_GUARD_TRIPPED,
                        lambda z, v: 1.0 / (y_star * z) * (1 + tg) - v[0], "rho < 1/(y* z)"))
        ev.append(Event(BOUND_GUARD_TRIPPED,
                        lambda z, v: 1.0 / (y_star * z) * (1 + tg) - abs(v[1]),
                        "|omega| < 1/(y* z)"))
    if spec.left_guard_rho0 is not None:
        r0 = spec.left_guard_rho0
        s = max(1.0, r0) * tg
        ev.append(Event(BOUND_GUARD_TRIPPED, lambda z, v: v[1] - THIRD + s, "omega > 1/3"))
        ev.append(Event(BOUND_GUARD_TRIPPED, lambda z, v: r0 + THIRD - v[0] - v[1] + s,
                        "rho + omega < rho0 + 1/3"))
        ev.append(Event(BOUND_GUARD_TRIPPED, lambda z, v: r0 / 3.0 - v[0] * v[1] + s,
                        "rho omega < rho0/3"))
        ev.append(Event(BOUND_GUARD_TRIPPED, lambda z, v: v[0] - v[1] + s, "rho > omega"))
    return ev


def _profile_from_run(run: RawRun, y_star: float, extra_segments=()) -> SolutionProfile:
    z = np.array(run.z)
    y = np.array(run.y)
    f = np.array(run.f)
    return SolutionProfile(y_star, z, y[:, 0], y[:, 1], f[:, 0], f[:, 1],
                           list(extra_segments) + list(run.segments))


def integrate(start: FlowState, p, z_target: float, events: EventSpec = EventSpec(),
              tol_ode: float = TOL_ODE, eps_sonic: float = 1e-12) -> IntegrationOutcome:
    """Advance from `start` towards z_target, stopping at the first event."""
    p = _as_param(p)
    if z_target == start.z:
        raise InvalidParameter("z_target equals the start coordinate")
    zw = start.z * start.omega
    d0 = 1.0 - p.y2 * zw * zw
    if abs(d0) <= eps_sonic:
        raise SonicSingularity(f"start state on the sonic line (indicator {d0:.3e})")
    sign_d = 1.0 if d0 > 0 else -1.0
    fun = _make_rhs(p.y2, sign_d, eps_sonic)
    evs = _build_events(events, p.y_star)
    run = dopri5(fun, start.z, [start.rho, start.omega], z_target, rtol=tol_ode, events=evs)
    prof = _profile_from_run(run, p.y_star)
    return _outcome(run, prof, p, z_target, events)


def _outcome(run: RawRun, prof: SolutionProfile, p, z_target, spec: EventSpec):
    term = run.termination
    zl = float(prof.z[-1])
    ind = float(prof.indicator()[-1])
    reason = run.event.detail if run.event is not None else ""
    if term == REACHED_TARGET and spec.origin_window is not None and z_target <= spec.origin_window:
        term = REACHED_ORIGIN_WINDOW
    if term == STEP_UNDERFLOW and spec.sonic_line and abs(ind) < 1e-4:
        # step control collapsed against the sonic line itself
        term, reason = HIT_SONIC_LINE, "step control stalled at the sonic line"
    prof.events.append({"event": term, "z": zl, "indicator": ind, "reason": reason})
    return IntegrationOutcome(term, prof, z_event=zl if term != REACHED_TARGET else None,
                              indicator_value=ind, reason=reason, steps=run.steps,
                              rejections=run.rejections)


####################################################################
# drivers used by the shooting code

def sonic_handoff(series: SonicSeries, h_max: float = 0.05) -> float:
    return handoff_offset(series.radius, h_max)


def _series_piece(series, lo, hi, n=33):
    zs = np.linspace(lo, hi, n)
    vals = [eval_series(series, z) for z in zs]
    return zs, vals, SeriesSegment(lo, hi, lambda z: eval_series(series, z))


def integrate_inner(p, series: SonicSeries, z_min: float = 1e-6,
                    events: Optional[EventSpec] = None, tol_ode: float = TOL_ODE,
                    h_max: float = 0.05, include_series: bool = True) -> IntegrationOutcome:
    """Leftward integration from the sonic handoff z = 1 - h.

    The returned profile is ordered in the direction of integration and
    starts with samples of the series piece on [1-h, 1] when
    `include_series` is set.
    """
    p = _as_param(p)
    if events is None:
        events = EventSpec(one_third=True, sonic_line=True, origin_window=z_min,
                           inner_guard=True)
    elif events.origin_window is None:
        events = EventSpec(**{**events.__dict__, "origin_window": z_min})
    h = sonic_handoff(series, h_max)
    start, _ = eval_series(series, 1.0 - h)
    out = integrate(start, p, z_min, events, tol_ode)
    if include_series:
        _attach_series(out, series, 1.0 - h, 1.0, descending=True)
    return out


def _attach_series(out: IntegrationOutcome, series, lo, hi, descending):
    zs, vals, seg = _series_piece(series, lo, hi)
    if descending:
        zs, vals = zs[::-1], vals[::-1]
    zs, vals = zs[:-1], vals[:-1]  # the end point is the run's first node
    pr = out.profile
    rho = [v[0].rho for v in vals]
    om = [v[0].omega for v in vals]
    dr = [v[1][0] for v in vals]
    dw = [v[1][1] for v in vals]
    out.profile = SolutionProfile(pr.y_star, np.concatenate([zs, pr.z]),
                                  np.concatenate([rho, pr.rho]), np.concatenate([om, pr.omega]),
                                  np.concatenate([dr, pr.drho]), np.concatenate([dw, pr.domega]),
                                  [seg] + list(pr.segments), pr.events)


def fit_farfield(z, rho, window: Tuple[float, float]):
    """Least-squares fit of z^2 rho ~ C (1 + c1/z + c2/z^2) on the window; returns (C, c1)."""
    z = np.asarray(z)
    m = (z >= window[0]) & (z <= window[1])
    if m.sum() < 4:
        raise ValueError("too few points in the far-field window")
    zz = z[m]
    A = np.column_stack([np.ones_like(zz), 1.0 / zz, 1.0 / zz ** 2])
    coef, *_ = np.linalg.lstsq(A, zz * zz * np.asarray(rho)[m], rcond=None)
    C = float(coef[0])
    return C, float(coef[1] / C)


def _fit_grid(prof: SolutionProfile, window, n: int = 65):
    # fixed nodes, uniform in 1/z, so C does not depend on the step sequence
    zs = 1.0 / np.linspace(1.0 / window[0], 1.0 / window[1], n)
    zs = np.clip(zs, prof.z.min(), prof.z.max())
    return zs, np.array([prof.dense(float(x))[0][0] for x in zs])


def _outer_violations(prof: SolutionProfile, p: SonicParameter, tol: float):
    z, r, w = prof.z, prof.rho, prof.omega
    yz = p.y_star * z
    bad = []
    if np.any(yz * r >= 1.0 + tol):
        bad.append("rho < 1/(y* z)")
    if np.any(yz * yz * r * w <= 1.0 - tol):
        bad.append("rho omega > 1/(y* z)^2")
    if np.any(w <= THIRD - tol) or np.any(w >= 1.0 + tol):
        bad.append("1/3 < omega < 1")
    return bad


def integrate_outer(p, series: SonicSeries, z_max: float = 100.0, tol_ode: float = TOL_OUTER,
                    h_max: float = 0.05, include_series: bool = True,
                    tol_guard: float = TOL_GUARD, window=None):
    """Rightward integration from z = 1 + h to z_max; returns (profile, C)."""
    p = _as_param(p)
    if z_max < 10:
        raise InvalidParameter("z_max must be >= 10")
    h = sonic_handoff(series, h_max)
    start, _ = eval_series(series, 1.0 + h)
    out = integrate(start, p, z_max, EventSpec(), tol_ode)
    if out.event != REACHED_TARGET:
        raise GuardViolation(f"outer integration stopped early: {out.event}")
    bad = _outer_violations(out.profile, p, tol_guard)
    if bad:
        raise GuardViolation("outer invariant violated: " + ", ".join(bad))
    if include_series:
        _attach_series(out, series, 1.0, 1.0 + h, descending=False)
    prof = out.profile
    if window is None:
        window = (z_max / 4.0, z_max)
    C, _ = fit_farfield(*_fit_grid(prof, window), window)
    prof.farfield_C = C
    return prof, C


def integrate_left(origin: OriginSeries, z_target: float, events: Optional[EventSpec] = None,
                   tol_ode: float = TOL_ODE, z_h: Optional[float] = None,
                   h_max: float = 0.05, include_series: bool = True) -> IntegrationOutcome:
    """Rightward integration of a centre-regular solution from its series."""
    p = origin.p
    if z_h is None:
        z_h = min(h_max, 0.5 * origin.radius)
    if not 0 < z_h < origin.radius:
        raise InvalidParameter(f"handoff {z_h} outside (0, {origin.radius})")
    if z_target <= z_h:
        raise InvalidParameter("z_target must exceed the handoff point")
    if events is None:
        events = EventSpec(sonic_line=True, left_guard_rho0=origin.rho0
                           if origin.rho0 > THIRD else None)
    start, _ = eval_origin_series(origin, z_h)
    out = integrate(start, p, z_target, events, tol_ode)
    if include_series:
        zs = np.linspace(0.0, z_h, 33)[:-1]
        vals = [eval_origin_series(origin, z) for z in zs]
        pr = out.profile
        seg = SeriesSegment(0.0, z_h, lambda z: eval_origin_series(origin, z))
        out.profile = SolutionProfile(
            pr.y_star, np.concatenate([zs, pr.z]),
            np.concatenate([[v[0].rho for v in vals], pr.rho]),
            np.concatenate([[v[0].omega for v in vals], pr.omega]),
            np.concatenate([[v[1][0] for v in vals], pr.drho]),
            np.concatenate([[v[1][1] for v in vals], pr.domega]),
            [seg] + list(pr.segments), pr.events, rho_center=origin.rho0)
    return out
