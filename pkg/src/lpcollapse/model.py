"""Self-similar ODE system in the rescaled coordinate z = y/y*.

The unknowns are the rescaled density rho(z) and the relative velocity
omega(z).  The system reads

    rho'   = -2 y*^2 z omega rho (rho - omega) / D
    omega' = (1 - 3 omega)/z + 2 y*^2 z omega^2 (rho - omega) / D

with D = 1 - y*^2 z^2 omega^2 vanishing on the sonic line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import (InvalidParameter, InvalidPressure, InvalidTime,
                     OriginSingularity, SonicSingularity)

EPS_SONIC = 1e-12
THIRD = 1.0 / 3.0


@dataclass(frozen=True)
class FlowState:
    z: float
    rho: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.z) and math.isfinite(self.rho)
                and math.isfinite(self.omega)):
            raise InvalidParameter(f"non-finite state {self!r}")
        if self.z < 0:
            raise InvalidParameter(f"negative z in {self!r}")


@dataclass(frozen=True)
class SonicParameter:
    y_star: float
    omega0: float = field(init=False, repr=False)

    def __post_init__(self):
        y = float(self.y_star)
        if not math.isfinite(y) or y <= 0:
            raise InvalidParameter(f"sonic parameter must be positive, got {y}")
        object.__setattr__(self, "y_star", y)
        object.__setattr__(self, "omega0", 1.0 / y)

    @property
    def y2(self) -> float:
        return self.y_star * self.y_star


@dataclass(frozen=True)
class PhysicalSnapshot:
    k: float
    t: float
    r: np.ndarray
    varrho: np.ndarray
    u: np.ndarray
    m: np.ndarray

    @property
    def samples(self):
        return list(zip(self.r, self.varrho, self.u, self.m))


def _as_param(p) -> SonicParameter:
    return p if isinstance(p, SonicParameter) else SonicParameter(p)


def rhs(z: float, rho: float, omega: float, y2: float) -> Tuple[float, float]:
    """Unchecked RHS, used in the integrator's inner loop."""
    zw = z * omega
    den = 1.0 - y2 * zw * zw
    q = 2.0 * y2 * zw * (rho - omega) / den
    return -q * rho, (1.0 - 3.0 * omega) / z + q * omega


def eval_rhs(state: FlowState, p, eps_sonic: float = EPS_SONIC) -> Tuple[float, float]:
    """Return (drho/dz, domega/dz) at `state`.

    Raises OriginSingularity for z <= 0 and SonicSingularity when the
    state is within `eps_sonic` of the sonic line.
    """
    p = _as_param(p)
    if state.z <= 0:
        raise OriginSingularity(f"RHS undefined at z={state.z}")
    d = sonic_indicator(state, p)
    if abs(d) <= eps_sonic:
        raise SonicSingularity(f"|1 - y*^2 z^2 omega^2| = {abs(d):.3e} at z={state.z}")
    return rhs(state.z, state.rho, state.omega, p.y2)


def sonic_indicator(state: FlowState, p) -> float:
    p = _as_param(p)
    zw = state.z * state.omega
    return 1.0 - p.y2 * zw * zw


def friedman_state(z: float) -> FlowState:
    return FlowState(z, THIRD, THIRD)


def farfield_state(z: float, p) -> FlowState:
    p = _as_param(p)
    if z <= 0:
        raise OriginSingularity("far-field density diverges at z=0")
    y = p.y_star * z
    return FlowState(z, 1.0 / (y * y), 1.0)


def to_physical(profile, k: float, t: float) -> PhysicalSnapshot:
    """Map a rescaled profile to physical (r, varrho, u, m) at time t < 0.

    `profile` needs attributes z, rho, omega (arrays) and y_star.  Mass is
    the trapezoid integral of 4 pi r^2 varrho on the profile's own grid.
    """
    if not t < 0:
        raise InvalidTime(f"self-similar collapse needs t < 0, got {t}")
    if not k > 0:
        raise InvalidPressure(f"pressure constant must be positive, got {k}")
    z = np.asarray(profile.z, dtype=float)
    if z.size == 0:
        raise InvalidParameter("empty profile")
    order = np.argsort(z)
    z = z[order]
    rho = np.asarray(profile.rho, dtype=float)[order]
    omega = np.asarray(profile.omega, dtype=float)[order]
    sk = math.sqrt(k)
    y = profile.y_star * z
    r = y * (-sk * t)
    varrho = rho / (2.0 * math.pi * k * t * t)
    u = sk * y * (omega - 1.0)
    f = 4.0 * math.pi * r * r * varrho
    m = np.concatenate(([0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(r))))
    if r[0] > 0:
        # grid does not start at the centre: add the missing inner cone
        m = m + f[0] * r[0] / 3.0
    return PhysicalSnapshot(k=float(k), t=float(t), r=r, varrho=varrho, u=u, m=m)
