"""Taylor expansion about z = 0 of the solutions regular at the centre.

The family is labelled by the central density rho0; omega(0) = 1/3 and
the first-order coefficients vanish.  The recursion is explicit:

    (N+1) rho_{N+1}  = y*^2 sum_{k+l=N-2} (k+1) rho_{k+1} (w^2)_l
                       - 2 y*^2 (w rho (rho - w))_{N-1}
    (N+4) omega_{N+1} = y*^2 sum_{k+l=N-2} (k+1) w_{k+1} (w^2)_l
                       + 3 y*^2 sum_{k+l=N-2} w_{k+1} (w^2)_l
                       + 2 y*^2 (w^2 (rho - w))_{N-1}
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._dual import Dual, deriv
from .errors import InvalidParameter, OutsideRadius
from .model import THIRD, FlowState, SonicParameter, _as_param
from .sonic import N_MAX, R_CAP, _cdot, _radius_bound, horner, radius_from_coeffs, MIN_COEFFS


@dataclass(frozen=True, eq=False)
class OriginSeries:
    p: SonicParameter
    rho0: float
    rho: np.ndarray
    omega: np.ndarray
    radius: float

    @property
    def n_max(self) -> int:
        return len(self.rho) - 1

    @property
    def coeffs(self):
        return list(zip(self.rho.tolist(), self.omega.tolist()))


def _recursion(n_max, r0, y2, dtype):
    r = np.zeros(n_max + 1, dtype=dtype)
    w = np.zeros(n_max + 1, dtype=dtype)
    r[0] = r0
    w[0] = THIRD
    if dtype is object:
        for i in range(1, n_max + 1):
            r[i] = Dual(0.0, 0.0)
            w[i] = Dual(0.0, 0.0)
        w[0] = Dual(THIRD, 0.0)
    w2 = []      # (omega^2)_l
    wrd = []     # (omega rho (rho - omega))_l
    w2d = []     # (omega^2 (rho - omega))_l
    for N in range(0, n_max):
        # extend the product caches to index N-1
        m = N - 1
        if m >= 0:
            w2.append(_cdot(w[:m + 1], w[m::-1]))
            d = r[:m + 1] - w[:m + 1]
            wr = [_cdot(w[:i + 1], r[i::-1]) for i in range(m + 1)]
            wrd.append(_cdot(np.array(wr, dtype=dtype), d[::-1]))
            w2d.append(_cdot(np.array(w2[:m + 1], dtype=dtype), d[::-1]))
        if N >= 2:
            j = np.arange(1, N, dtype=float)   # k+1, k = 0..N-2
            W = np.array(w2[N - 2::-1], dtype=dtype)
            gr = _cdot(j * r[1:N], W)
            gw = _cdot(j * w[1:N], W)
            g3 = _cdot(w[1:N], W)
        else:
            gr = gw = g3 = 0.0
        tr = wrd[N - 1] if N >= 1 else 0.0
        tw = w2d[N - 1] if N >= 1 else 0.0
        r[N + 1] = (y2 * gr - 2.0 * y2 * tr) / (N + 1)
        w[N + 1] = (y2 * gw + 3.0 * y2 * g3 + 2.0 * y2 * tw) / (N + 4)
    return r, w


def extend_origin_series(p, rho0: float, n_max: int = N_MAX, r_cap: float = R_CAP) -> OriginSeries:
    p = _as_param(p)
    if not rho0 > 0:
        raise InvalidParameter(f"central density must be positive, got {rho0}")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    r, w = _recursion(n_max, float(rho0), p.y2, float)
    if n_max + 1 >= MIN_COEFFS:
        rad = radius_from_coeffs(r, w, r_cap)
    else:
        rad = min(r_cap, _radius_bound(r, w, r_cap))
    return OriginSeries(p, float(rho0), r, w, rad)


def eval_origin_series(series: OriginSeries, z: float):
    """Return (FlowState, (drho/dz, domega/dz)) at 0 <= z < radius."""
    if z < 0 or (z > 0 and z >= series.radius):
        raise OutsideRadius(f"z={z:.3g} outside [0, {series.radius:.3g})")
    r, dr = horner(series.rho, z)
    w, dw = horner(series.omega, z)
    return FlowState(z, float(r), float(w)), (float(dr), float(dw))


def origin_param_derivative(series: OriginSeries):
    """d/d rho0 of every coefficient, by forward differentiation of the recursion."""
    r, w = _recursion(series.n_max, Dual(series.rho0, 1.0), series.p.y2, object)
    return (np.array([deriv(x) for x in r], dtype=float),
            np.array([deriv(x) for x in w], dtype=float))


def origin_series_to_dict(series: OriginSeries) -> dict:
    return {
        "y_star": series.p.y_star,
        "branch": "origin",
        "rho0": series.rho0,
        "n_max": series.n_max,
        "radius": series.radius,
        "rho": [float(x) for x in series.rho],
        "omega": [float(x) for x in series.omega],
    }
