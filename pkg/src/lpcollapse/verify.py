"""Named checks of the proven bounds, evaluated on profiles and series.

Every check returns report entries with a signed margin: positive means
the inequality holds with that much slack.  Strict inequalities accept
margins down to -MARGIN_SLACK to absorb roundoff; margins within
BOUNDARY_EPS of zero are reported as "boundary" (saturated, e.g. by an
exact solution) rather than as failures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .config import SolverConfig
from .errors import LPError
from .model import THIRD, _as_param, rhs, to_physical
from .origin import extend_origin_series, origin_param_derivative
from .profile import DopriSegment, SolutionProfile, write_json
from .sonic import growth_constant

MARGIN_SLACK = 1e-9
BOUNDARY_EPS = 1e-12
PASS, FAIL, BOUNDARY, SKIPPED = "pass", "fail", "boundary", "skipped"


@dataclass
class CheckResult:
    name: str
    region: str
    margin: float
    status: str
    anchor: str
    detail: str = ""

    def as_dict(self) -> dict:
        return {"check": self.name, "region": self.region, "worst_margin": self.margin,
                "status": self.status, "anchor": self.anchor, "detail": self.detail}


@dataclass
class InvariantReport:
    entries: List[CheckResult] = field(default_factory=list)

    def extend(self, items: Iterable[CheckResult]) -> "InvariantReport":
        self.entries.extend(items)
        return self

    @property
    def verdict(self) -> str:
        return FAIL if any(e.status == FAIL for e in self.entries) else PASS

    @property
    def ok(self) -> bool:
        return self.verdict == PASS

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "checks": [e.as_dict() for e in self.entries]}

    def to_json(self, path) -> None:
        write_json(self.as_dict(), path)

    def table(self) -> str:
        w = max([len(e.name) for e in self.entries] + [5])
        lines = [f"{'check':<{w}}  {'status':<8}  {'worst margin':>13}  region"]
        for e in self.entries:
            lines.append(f"{e.name:<{w}}  {e.status:<8}  {e.margin:>13.4e}  {e.region}")
        lines.append(f"overall: {self.verdict}")
        return "\n".join(lines)


def _status(margin: float, slack: float = MARGIN_SLACK) -> str:
    if not math.isfinite(margin):
        return FAIL
    if abs(margin) <= BOUNDARY_EPS:
        return BOUNDARY
    return PASS if margin >= -slack else FAIL


def _entry(name, z, margins, anchor, slack=MARGIN_SLACK) -> CheckResult:
    z = np.asarray(z)
    margins = np.asarray(margins, dtype=float)
    if margins.size == 0:
        return CheckResult(name, "empty", float("nan"), SKIPPED, anchor, "no points in region")
    i = int(np.nanargmin(margins)) if np.any(np.isfinite(margins)) else 0
    m = float(margins[i])
    region = f"[{z.min():.6g}, {z.max():.6g}]"
    return CheckResult(name, region, m, _status(m, slack), anchor, f"worst at z={z[i]:.6g}")


####################################################################
# profile checks

def check_inner_apriori(profile: SolutionProfile, p, z_lo: float = 0.0,
                        z_hi: float = 1.0) -> List[CheckResult]:
    """0 < rho < 1/(y* z), |omega| < 1/(y* z) and (z rho)' > 0 on (z_lo, z_hi)."""
    p = _as_param(p)
    m = (profile.z > z_lo) & (profile.z < z_hi * (1 - 1e-12))
    z, r, w, dr = profile.z[m], profile.rho[m], profile.omega[m], profile.drho[m]
    yz = p.y_star * z
    a = "inner a priori bounds"
    return [
        _entry("inner.rho_positive", z, r, a),
        _entry("inner.rho_below_sonic", z, 1.0 - yz * r, a),
        _entry("inner.omega_below_sonic", z, 1.0 - yz * np.abs(w), a),
        _entry("inner.z_rho_increasing", z, r + z * dr, a),
    ]


def _identity_residuals(profile: SolutionProfile, z_lo: float):
    """Relative residual of d/dz(rho omega z^2) = (1 - omega) rho z."""
    pts = []
    for s in profile.segments:
        if isinstance(s, DopriSegment) and s.lo > z_lo:
            pts.append(0.5 * (s.lo + s.hi))
    zs, res = [], []
    for z in pts:
        (r, w), (dr, dw) = profile.dense(z)
        lhs = (dr * w + r * dw) * z * z + 2 * z * r * w
        rhs_ = (1.0 - w) * r * z
        scale = abs(dr * w * z * z) + abs(r * dw * z * z) + abs(2 * z * r * w) + abs(rhs_)
        zs.append(z)
        res.append(abs(lhs - rhs_) / scale)
    return np.array(zs), np.array(res)


def check_outer_invariants(profile: SolutionProfile, p, z_lo: float = 1.0,
                           identity_tol: float = 1e-9) -> List[CheckResult]:
    """1/3 < omega < 1, -2 < rho' z/rho < -1, rho < 1/(y* z), rho omega > 1/(y* z)^2."""
    p = _as_param(p)
    m = profile.z > z_lo * (1 + 1e-12)
    z, r, w, dr = profile.z[m], profile.rho[m], profile.omega[m], profile.drho[m]
    yz = p.y_star * z
    el = dr * z / r
    a = "outer invariant region"
    out = [
        _entry("outer.omega_above_third", z, w - THIRD, a),
        _entry("outer.omega_below_one", z, 1.0 - w, a),
        _entry("outer.log_slope_above_minus2", z, el + 2.0, a),
        _entry("outer.log_slope_below_minus1", z, -1.0 - el, a),
        _entry("outer.rho_below_sonic", z, 1.0 - yz * r, a),
        _entry("outer.rho_omega_above_farfield", z, yz * yz * r * w - 1.0, a),
    ]
    zi, ri = _identity_residuals(profile, z_lo)
    if zi.size:
        out.append(_entry("outer.mass_flux_identity", zi, identity_tol - ri,
                          "d/dz(rho omega z^2) = (1-omega) rho z", slack=0.0))
    return out


def check_left_apriori(profile: SolutionProfile, rho0: float, z_hi: float = math.inf
                       ) -> List[CheckResult]:
    """Bounds along a centre-regular solution with rho(0) = rho0 on (0, z_hi)."""
    m = (profile.z > 0) & (profile.z < z_hi)
    z, r, w, dr = profile.z[m], profile.rho[m], profile.omega[m], profile.drho[m]
    a = "centre-regular family bounds"
    return [
        _entry("left.omega_above_third", z, w - THIRD, a),
        _entry("left.sum_below_centre", z, rho0 + THIRD - r - w, a),
        _entry("left.product_below_centre", z, rho0 / 3.0 - r * w, a),
        _entry("left.rho_above_omega", z, r - w, a),
        _entry("left.rho_decreasing", z, -dr, a),
    ]


def z0_scale(p, rho0: float) -> float:
    """Spatial scale below which the centre density stays bounded below."""
    p = _as_param(p)
    return math.sqrt(3.0) / (math.sqrt(2.0) * p.y_star * max(rho0, 1.0))


def lower_bound_rho(rho0: float) -> float:
    return rho0 * math.exp(-1.0 / rho0) if rho0 > 1 else rho0 * math.exp(-1.0)


def check_left_lower_bound(profile: SolutionProfile, p, rho0: float) -> CheckResult:
    z0 = z0_scale(p, rho0)
    m = profile.z <= z0
    b = lower_bound_rho(rho0)
    e = _entry("left.density_lower_bound", profile.z[m], profile.rho[m] - b,
               "rho_- >= rho0 exp(-1/rho0) up to z0(rho0)")
    if profile.z.max() < z0 * (1 - 1e-9):
        e.status, e.detail = FAIL, f"profile ends at {profile.z.max():.6g} < z0={z0:.6g}"
    return e


def check_coefficient_growth(series, tail_fraction: float = 0.25) -> CheckResult:
    """Finite C_hat and geometric decay of N^2 |c_N| r^(N-1) at the tail."""
    rho, omega = np.asarray(series.rho), np.asarray(series.omega)
    C = growth_constant(rho, omega)
    c = np.maximum(np.abs(rho), np.abs(omega))
    n = len(c) - 1
    a = "coefficient growth bound"
    if not math.isfinite(C):
        return CheckResult("series.growth", f"N<= {n}", -math.inf, FAIL, a, "C_hat not finite")
    if C == 0:
        return CheckResult("series.growth", f"N<= {n}", 1.0, PASS, a, "all higher coefficients vanish")
    N = np.arange(len(c))
    r = series.radius
    start = max(2, int(n * (1 - tail_fraction)))
    tail = np.max(N[start:] ** 2 * c[start:] * r ** (N[start:] - 1.0))
    return CheckResult("series.growth", f"N in [{start}, {n}]", float(1.0 - tail), _status(1.0 - tail),
                       a, f"C_hat={C:.6g}, radius={r:.6g}")


def check_monotonicity_rho0(p, z_window: Optional[Sequence[float]] = None, eta: float = 0.05,
                            rho0_values: Sequence[float] = (THIRD + 0.1, 1.0, 2.0, 5.0, 10.0),
                            cfg: SolverConfig = SolverConfig()) -> List[CheckResult]:
    """Centred differences of rho_-(z; rho0) in rho0 are positive for z <= eta rho0^(-3/4)."""
    from .shooting import left_state
    p = _as_param(p)
    out = []
    for r0 in rho0_values:
        scale = eta * r0 ** -0.75
        zs = np.linspace(scale / 8, scale, 8) if z_window is None else np.asarray(z_window, float)
        inside = zs[zs <= scale]
        name = f"left.monotone_in_rho0[{r0:g}]"
        anchor = "monotonicity in the centre density"
        if inside.size == 0:
            out.append(CheckResult(name, f"z > {scale:.4g}", float("nan"), SKIPPED, anchor,
                                   "all points beyond eta rho0^(-3/4)"))
            continue
        d = 1e-5 * r0
        op = extend_origin_series(p, r0 + d, cfg.n_max, cfg.r_cap)
        om = extend_origin_series(p, r0 - d, cfg.n_max, cfg.r_cap)
        fd = [(left_state(p, r0 + d, z, cfg, op)[0] - left_state(p, r0 - d, z, cfg, om)[0]) / (2 * d)
              for z in inside]
        e = _entry(name, inside, fd, anchor)
        skipped = int(np.sum(zs > scale))
        if skipped:
            e.detail += f"; {skipped} point(s) beyond the scale skipped"
        out.append(e)
    return out


def check_residual(profile: SolutionProfile, p, tol: float = 1e-8,
                   min_indicator: float = 1e-2) -> CheckResult:
    """Max relative mismatch between stored/dense derivatives and the RHS."""
    p = _as_param(p)
    y2 = p.y2
    worst, zw = 0.0, None

    def upd(z, r, w, dr, dw):
        nonlocal worst, zw
        if z <= 0:
            return
        if abs(1.0 - y2 * (z * w) ** 2) < min_indicator:
            return
        fr, fw = rhs(z, r, w, y2)
        e = max(abs(dr - fr) / max(1.0, abs(fr)), abs(dw - fw) / max(1.0, abs(fw)))
        if e > worst or not math.isfinite(e):
            worst, zw = e, z

    for z, r, w, dr, dw in zip(profile.z, profile.rho, profile.omega, profile.drho, profile.domega):
        upd(z, r, w, dr, dw)
    for s in profile.segments:
        for th in (0.25, 0.5, 0.75):
            z = s.lo + th * (s.hi - s.lo)
            y, dy = s(z)
            upd(z, y[0], y[1], dy[0], dy[1])
    return CheckResult("profile.ode_residual", f"[{profile.z.min():.6g}, {profile.z.max():.6g}]",
                       float(tol - worst), _status(tol - worst, 0.0),
                       "defining ODE system", f"max relative residual {worst:.3e} at z={zw}")


def check_physical(snapshot) -> List[CheckResult]:
    r, rho, u, m = snapshot.r, snapshot.varrho, snapshot.u, snapshot.m
    sk = math.sqrt(snapshot.k)
    y = r / (-sk * snapshot.t)
    pos = y > 0
    return [
        _entry("physical.density_positive", r, rho, "positive density"),
        _entry("physical.mass_nondecreasing", r[1:], np.diff(m), "enclosed mass", slack=0.0)
        if len(r) > 1 else CheckResult("physical.mass_nondecreasing", "", 0, SKIPPED, ""),
        CheckResult("physical.mass_at_centre", "r=0", -abs(float(m[0])) if r[0] == 0 else 0.0,
                    PASS if (r[0] > 0 or m[0] == 0) else FAIL, "m(0) = 0"),
        _entry("physical.velocity_negative", r[pos], -u[pos], "infall velocity"),
        _entry("physical.velocity_lower_bound", r[pos], u[pos] + (2.0 / 3.0) * sk * y[pos],
               "-(2/3) y <= u"),
    ]


####################################################################
# suite

def run_suite(sol, cfg: SolverConfig = SolverConfig(), monotonicity: bool = True
              ) -> InvariantReport:
    """All checks for an assembled LP solution."""
    p = _as_param(sol.y_bar)
    prof = sol.profile
    rep = InvariantReport()
    rep.extend(check_inner_apriori(prof, p))
    rep.extend(check_outer_invariants(prof, p))
    rep.extend(check_left_apriori(prof, sol.rho_center, z_hi=1.0))
    rep.entries.append(check_left_lower_bound(sol.left, p, sol.rho_center)
                       if sol.left.z.max() >= z0_scale(p, sol.rho_center)
                       else check_left_lower_bound(prof, p, sol.rho_center))
    rep.entries.append(check_coefficient_growth(sol.sonic))
    g = check_coefficient_growth(sol.origin)
    g.name = "origin.growth"
    rep.entries.append(g)
    dr, dw = origin_param_derivative(sol.origin)
    rep.entries.append(CheckResult("origin.d_omega2_d_rho0", "N=2",
                                   float(dw[2]), _status(float(dw[2])), "omega_2 increases with rho0"))
    rep.entries.append(check_residual(prof, p))
    if monotonicity:
        rep.extend(check_monotonicity_rho0(p, eta=cfg.eta, cfg=cfg))
    ov = sol.diagnostics.get("overlap", {})
    if ov:
        m = cfg.tol_match - ov["max"]
        rep.entries.append(CheckResult("centre.overlap", f"[{ov['window'][0]:g}, {ov['window'][1]:g}]",
                                       float(m), _status(m, 0.0), "centre/inner coincidence",
                                       f"rho {ov['rho']:.3e}, omega {ov['omega']:.3e}"))
    w0 = float(prof.omega[0])
    rep.entries.append(CheckResult("centre.omega_is_third", "z=0", -abs(w0 - THIRD),
                                   PASS if abs(w0 - THIRD) <= 1e-12 else FAIL,
                                   "omega(0) = 1/3"))
    try:
        snap = to_physical(prof, 1.0, -1.0)
        rep.extend(check_physical(snap))
    except LPError as exc:  # pragma: no cover
        rep.entries.append(CheckResult("physical", "", -math.inf, FAIL, "", str(exc)))
    return rep


