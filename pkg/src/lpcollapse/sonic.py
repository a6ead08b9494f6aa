"""Taylor expansion of smooth solutions about the sonic point z = 1.

Writing rho = sum rho_N (z-1)^N and omega = sum omega_N (z-1)^N, every
order N >= 2 is fixed by a 2x2 linear system A_N (rho_N, omega_N) =
(F_N, G_N) whose right-hand side is a polynomial in lower coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ._dual import Dual, deriv, value
from .errors import (DegenerateParameter, InsufficientCoefficients, NonFiniteState,
                     OutsideRadius, UnsupportedParameter)
from .model import FlowState, SonicParameter, _as_param

LP = "LP"
HUNTER = "Hunter"

N_MAX = 80
R_CAP = 0.5
SAFETY = 0.8
MIN_COEFFS = 10
TOL_DEGENERATE = 1e-8
DET_GUARD = 1e-10


@dataclass(frozen=True)
class SolvabilityMatrix:
    entries: np.ndarray
    det: float


@dataclass(frozen=True, eq=False)
class SonicSeries:
    p: SonicParameter
    branch: str
    rho: np.ndarray
    omega: np.ndarray
    radius: float

    @property
    def n_max(self) -> int:
        return len(self.rho) - 1

    @property
    def coeffs(self):
        return list(zip(self.rho.tolist(), self.omega.tolist()))


def normalize_branch(branch: str) -> str:
    b = str(branch).strip().lower()
    if b == "lp":
        return LP
    if b == "hunter":
        return HUNTER
    raise ValueError(f"unknown branch {branch!r}")


def lp_seed(p) -> Tuple[float, float, float, float, float, float]:
    """(rho0, omega0, rho1, omega1, rho2, omega2) on the LP branch."""
    p = _as_param(p)
    y = p.y_star
    if y <= 1.5:
        raise UnsupportedParameter(f"LP expansion needs y* > 3/2, got {y}")
    w0 = p.omega0
    den = 2.0 * y * (2.0 * y - 3.0)
    return (w0, w0, -w0, 1.0 - 2.0 * w0,
            (-y * y + 6.0 * y - 7.0) / den,
            (-5.0 * y * y + 19.0 * y - 17.0) / den)


def hunter_degenerate_orders(p, n_max: int = N_MAX, tol: float = TOL_DEGENERATE):
    """Orders N in [2, n_max] with |y* - (N+1)| < tol."""
    y = _as_param(p).y_star
    return [n for n in range(2, n_max + 1) if abs(y - (n + 1)) < tol]


def hunter_seed(p, n_max: int = N_MAX, tol_degenerate: float = TOL_DEGENERATE):
    """(rho0, omega0, rho1, omega1) on the Hunter branch."""
    p = _as_param(p)
    bad = hunter_degenerate_orders(p, n_max, tol_degenerate)
    if bad:
        raise DegenerateParameter(
            f"Hunter recursion singular at y*={p.y_star} (order N={bad[0]})")
    w0 = p.omega0
    return (w0, w0, 1.0 - 3.0 * w0, 0.0)


def coeff_matrix(N: int, w0: float, w1: float, r1: float) -> SolvabilityMatrix:
    a = np.array([[-2.0 * N + 2.0 - 2.0 * N * w1 / w0, -2.0 * r1 / w0 - 2.0],
                  [-2.0, -2.0 * N - 4.0 + 2.0 / w0 - (2.0 * N + 2.0) * w1 / w0]])
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return SolvabilityMatrix(a, float(det))


####################################################################
# source terms

def _cdot(a, b):
    """sum a_i b_i for equal-length slices; works for float and Dual arrays."""
    if len(a) == 0:
        return 0.0
    return np.dot(a, b)


class _Convs:
    """Running products (omega^2)_l, (omega rho)_l, (omega^3)_l for l < N."""

    def __init__(self, dtype):
        self.dtype = dtype
        self.w2 = []
        self.wr = []
        self.w3 = []

    def update(self, r, w, upto):
        # append entries up to index upto-1
        while len(self.w2) < upto:
            m = len(self.w2)
            self.w2.append(_cdot(w[:m + 1], w[m::-1]))
            self.wr.append(_cdot(w[:m + 1], r[m::-1]))
            self.w3.append(_cdot(w[:m + 1], np.array(self.w2[m::-1], dtype=self.dtype)))


def _alt(M):
    # (-1)^(M-j) for j = 0..M
    return np.array([(-1.0) ** (M - j) for j in range(M + 1)])


def _source(N, r, w, y2, cv: _Convs):
    """(F_N, G_N) from coefficient arrays r, w with entries 0..N-1 filled."""
    dt = cv.dtype
    cv.update(r, w, N)
    W2 = np.array(cv.w2[:N], dtype=dt)
    WR = np.array(cv.wr[:N], dtype=dt)
    W3 = np.array(cv.w3[:N], dtype=dt)
    d = r[:N] - w[:N]
    j = np.arange(1, N, dtype=float)          # j = k+1 = 1..N-1
    jr = j * r[1:N]
    jw = j * w[1:N]
    # lower part of (omega^2)_N: sum_{0<m<N} omega_m omega_{N-m}
    w2low = _cdot(w[1:N], w[N - 1:0:-1])

    def grad_block(jx, x1):
        # y*^2 [ sum_{1<=k<=N-2} (k+1)x_{k+1}(w^2)_{N-k} + x_1 w2low
        #        + 2 sum_{k<=N-2} (k+1)x_{k+1}(w^2)_{N-1-k}
        #        + sum_{k<=N-2} (k+1)x_{k+1}(w^2)_{N-2-k} ]
        t1 = _cdot(jx[1:], W2[N - 1:1:-1]) if N > 2 else 0.0
        t3 = _cdot(jx, W2[N - 1:0:-1])
        t4 = _cdot(jx, W2[N - 2::-1])
        return t1 + x1 * w2low + 2.0 * t3 + t4

    # sum_{k+l+n=N, n<N} a_k b_l d_n, with d_0 = 0 except for exactness
    wr_low = _cdot(w[1:N], r[N - 1:0:-1])
    trip_r = _cdot(d[1:N], WR[N - 1:0:-1]) + d[0] * wr_low
    trip_w = _cdot(d[1:N], W2[N - 1:0:-1]) + d[0] * w2low
    # (omega rho d)_{N-1}, (omega^2 d)_{N-1}
    prev_r = _cdot(d[:N], WR[N - 1::-1])
    prev_w = _cdot(d[:N], W2[N - 1::-1])

    F = y2 * grad_block(jr, r[1]) - 2.0 * y2 * (trip_r + prev_r)

    G = y2 * grad_block(jw, w[1]) + 2.0 * y2 * (trip_w + prev_w)
    G = G + (-1.0) ** N - 3.0 * _cdot(w[:N], _alt(N)[:N])
    # -(1 - 3 omega)(z-1)^? expansions of y*^2 z^2 omega^2 (1 - 3 omega)
    s_w2 = (_cdot(W2[:N - 1], _alt(N - 2)) + 2.0 * _cdot(W2[:N], _alt(N - 1))
            + _cdot(W2[:N], _alt(N)[:N]) + w2low)
    G = G - y2 * s_w2
    s_w3 = (_cdot(W3[:N - 1], _alt(N - 2)) + 2.0 * _cdot(W3[:N], _alt(N - 1))
            + _cdot(W3[:N], _alt(N)[:N]) + _cdot(w[1:N], W2[N - 1:0:-1])
            + w[0] * w2low)
    G = G + 3.0 * y2 * s_w3
    return F, G


def source_terms(N: int, rho, omega, p) -> Tuple[float, float]:
    """Right-hand side (F_N, G_N) of the order-N linear system.

    `rho` and `omega` hold coefficients 0..N-1 (extra entries are ignored).
    """
    p = _as_param(p)
    if N < 2:
        raise ValueError("source terms are defined for N >= 2")
    r = np.asarray(rho[:N], dtype=float)
    w = np.asarray(omega[:N], dtype=float)
    F, G = _source(N, r, w, p.y2, _Convs(float))
    return float(F), float(G)


####################################################################
# construction

def _lp_solve(N, w0, F, G):
    b = 1.0 - 1.0 / w0
    a = N * b + 1.0
    rN = F / (2.0 * a)
    wN = G / (2.0 * N * b) + F / (2.0 * N * b * a)
    return rN, wN


def _general_solve(N, w0, w1, r1, F, G):
    A = coeff_matrix(N, w0, w1, r1)
    if abs(A.det) < DET_GUARD * np.linalg.norm(A.entries):
        raise DegenerateParameter(f"A_{N} singular (det={A.det:.3e})")
    a = A.entries
    rN = (a[1, 1] * F - a[0, 1] * G) / A.det
    wN = (a[0, 0] * G - a[1, 0] * F) / A.det
    return rN, wN


def _build(p: SonicParameter, branch: str, n_max: int):
    w0 = p.omega0
    r = np.zeros(n_max + 1)
    w = np.zeros(n_max + 1)
    if branch == LP:
        r[0], w[0], r[1], w[1] = lp_seed(p)[:4]
    else:
        r[0], w[0], r[1], w[1] = hunter_seed(p, n_max)
    cv = _Convs(float)
    for N in range(2, n_max + 1):
        F, G = _source(N, r, w, p.y2, cv)
        if branch == LP:
            r[N], w[N] = _lp_solve(N, w0, F, G)
        else:
            r[N], w[N] = _general_solve(N, w0, w[1], r[1], F, G)
    return r, w


def extend_series(p, n_max: int = N_MAX, branch: str = LP, r_cap: float = R_CAP) -> SonicSeries:
    """Compute coefficients 0..n_max on the requested branch."""
    p = _as_param(p)
    branch = normalize_branch(branch)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if branch == LP and p.y_star <= 1.5:
        raise UnsupportedParameter(f"LP expansion needs y* > 3/2, got {p.y_star}")
    with np.errstate(over="ignore", invalid="ignore"):
        r, w = _build(p, branch, n_max)
    bad = ~(np.isfinite(r) & np.isfinite(w))
    if bad.any():
        # close to a degenerate order the coefficients grow past double range
        raise NonFiniteState(f"{branch} coefficients overflow at order N={int(np.argmax(bad))} "
                             f"for y*={p.y_star}; request fewer orders")
    if n_max + 1 >= MIN_COEFFS:
        rad = radius_from_coeffs(r, w, r_cap)
    else:
        rad = min(r_cap, _radius_bound(r, w, r_cap))
    return SonicSeries(p, branch, r, w, rad)


####################################################################
# radius

def growth_constant(rho, omega) -> float:
    """C_hat = max_{N>=2} (N^2 max(|rho_N|, |omega_N|))^(1/(N-1))."""
    c = np.maximum(np.abs(rho), np.abs(omega))
    best = 0.0
    for N in range(2, len(c)):
        if c[N] > 0:
            best = max(best, (N * N * c[N]) ** (1.0 / (N - 1)))
    return best


def _radius_bound(r, w, r_cap):
    C = growth_constant(r, w)
    return r_cap if C == 0 else 1.0 / C


def radius_from_coeffs(rho, omega, r_cap: float = R_CAP, safety: float = SAFETY) -> float:
    """Root test on N^2 max(|rho_N|,|omega_N|), clipped to r_cap.

    The tail (upper half of the computed orders) gives the asymptotic rate;
    the result is never smaller than min(r_cap, 1/C_hat).
    """
    rho = np.asarray(rho, dtype=float)
    omega = np.asarray(omega, dtype=float)
    n = len(rho) - 1
    if n + 1 < MIN_COEFFS:
        raise InsufficientCoefficients(f"need >= {MIN_COEFFS} coefficients, have {n + 1}")
    c = np.maximum(np.abs(rho), np.abs(omega))
    if not np.any(c[1:] > 0):
        return r_cap
    tail = 0.0
    for N in range(max(2, n // 2), n + 1):
        if c[N] > 0:
            tail = max(tail, (N * N * c[N]) ** (1.0 / (N - 1)))
    C = growth_constant(rho, omega)
    cand = [1.0 / C] if C > 0 else [r_cap]
    if tail > 0:
        cand.append(safety / tail)
    return float(min(r_cap, max(cand)))


def estimate_radius(series, r_cap: float = R_CAP) -> float:
    return radius_from_coeffs(series.rho, series.omega, r_cap)


####################################################################
# evaluation

def horner(c, x):
    """Value and derivative of sum c_N x^N."""
    v = 0.0
    dv = 0.0
    for a in c[::-1]:
        dv = dv * x + v
        v = v * x + a
    return v, dv


def eval_series(series: SonicSeries, z: float):
    """Return (FlowState, (drho/dz, domega/dz)) at z."""
    dz = z - 1.0
    if dz != 0.0 and abs(dz) >= series.radius:
        raise OutsideRadius(f"|z-1|={abs(dz):.3g} >= radius {series.radius:.3g}")
    r, dr = horner(series.rho, dz)
    w, dw = horner(series.omega, dz)
    return FlowState(z, float(r), float(w)), (float(dr), float(dw))


def multiplied_residual(series: SonicSeries, z: float) -> Tuple[float, float]:
    """Residual of the polynomial (denominator-cleared) form of the ODE."""
    st, (dr, dw) = eval_series(series, z)
    y2 = series.p.y2
    rho, w = st.rho, st.omega
    den = 1.0 - y2 * z * z * w * w
    e1 = den * dr + 2.0 * y2 * z * w * rho * (rho - w)
    e2 = z * den * dw - (1.0 - 3.0 * w) * den - 2.0 * y2 * z * z * w * w * (rho - w)
    return e1, e2


####################################################################
# parameter derivative

def param_derivative_series(series: SonicSeries):
    """Coefficients of d/d omega0 of the LP series, as two arrays."""
    if series.branch != LP:
        raise UnsupportedParameter("parameter derivative implemented for the LP branch only")
    w0 = series.p.omega0
    if not 0.0 < w0 < 2.0 / 3.0:
        raise UnsupportedParameter(f"omega0={w0} outside (0, 2/3)")
    n = series.n_max
    dr = np.zeros(n + 1)
    dw = np.zeros(n + 1)
    dr[0], dw[0] = 1.0, 1.0
    if n >= 1:
        dr[1], dw[1] = -1.0, -2.0
    r = np.empty(n + 1, dtype=object)
    w = np.empty(n + 1, dtype=object)
    for i in range(min(n, 1) + 1):
        r[i] = Dual(series.rho[i], dr[i])
        w[i] = Dual(series.omega[i], dw[i])
    y2 = Dual(1.0 / (w0 * w0), -2.0 / (w0 ** 3))
    cv = _Convs(object)
    b = 1.0 - 1.0 / w0
    for N in range(2, n + 1):
        F, G = _source(N, r, w, y2, cv)
        Fv, Fd, Gv, Gd = value(F), deriv(F), value(G), deriv(G)
        a = N * b + 1.0
        rN = series.rho[N]
        dr[N] = -N / (w0 * w0 * a) * rN + Fd / (2.0 * a)
        dw[N] = (-Gv / (2.0 * N * b * b * w0 * w0) + Gd / (2.0 * N * b)
                 + Fd / (2.0 * N * b * a)
                 - Fv * (2.0 * N * b + 1.0) / (2.0 * N * w0 * w0 * b * b * a * a))
        r[N] = Dual(series.rho[N], dr[N])
        w[N] = Dual(series.omega[N], dw[N])
    return dr, dw


def series_to_dict(series: SonicSeries) -> dict:
    return {
        "y_star": series.p.y_star,
        "branch": series.branch,
        "n_max": series.n_max,
        "radius": series.radius,
        "rho": [float(x) for x in series.rho],
        "omega": [float(x) for x in series.omega],
    }


def handoff_offset(radius: float, h_max: float = 0.05) -> float:
    return min(h_max, 0.5 * radius)


__all__ = [
    "LP", "HUNTER", "SonicSeries", "SolvabilityMatrix", "lp_seed", "hunter_seed",
    "coeff_matrix", "source_terms", "extend_series", "estimate_radius",
    "radius_from_coeffs", "growth_constant", "eval_series", "param_derivative_series",
    "series_to_dict", "multiplied_residual", "handoff_offset", "horner",
]

