"""Solution profiles: sampled states plus piecewise dense representation."""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .model import FlowState


class DopriSegment:
    """Quartic continuous extension of one Dormand-Prince step."""

    __slots__ = ("z0", "h", "r1", "r2", "r3", "r4", "r5")

    def __init__(self, z0, h, r1, r2, r3, r4, r5):
        self.z0, self.h = z0, h
        self.r1, self.r2, self.r3, self.r4, self.r5 = r1, r2, r3, r4, r5

    @property
    def lo(self):
        return min(self.z0, self.z0 + self.h)

    @property
    def hi(self):
        return max(self.z0, self.z0 + self.h)

    def __call__(self, z):
        th = (z - self.z0) / self.h
        t1 = 1.0 - th
        y = []
        dy = []
        for a1, a2, a3, a4, a5 in zip(self.r1, self.r2, self.r3, self.r4, self.r5):
            q = a4 + t1 * a5
            s = a3 + th * q
            t = a2 + t1 * s
            y.append(a1 + th * t)
            ds = q - th * a5
            dt = -s + t1 * ds
            dy.append((t + th * dt) / self.h)
        return y, dy


class SeriesSegment:
    """Power series piece, wrapped so profiles can evaluate it like a step."""

    __slots__ = ("lo", "hi", "fn")

    def __init__(self, lo, hi, fn):
        self.lo, self.hi, self.fn = lo, hi, fn

    def __call__(self, z):
        st, (dr, dw) = self.fn(z)
        return [st.rho, st.omega], [dr, dw]


@dataclass(eq=False)
class SolutionProfile:
    y_star: float
    z: np.ndarray
    rho: np.ndarray
    omega: np.ndarray
    drho: np.ndarray
    domega: np.ndarray
    segments: list = field(default_factory=list, repr=False)
    events: List[dict] = field(default_factory=list)
    rho_center: Optional[float] = None
    farfield_C: Optional[float] = None

    def __post_init__(self):
        for name in ("z", "rho", "omega", "drho", "domega"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.z)
        if not all(len(getattr(self, k)) == n for k in ("rho", "omega", "drho", "domega")):
            raise ValueError("profile arrays differ in length")
        if n > 1:
            dz = np.diff(self.z)
            if not (np.all(dz > 0) or np.all(dz < 0)):
                raise ValueError("profile grid is not strictly monotone")
        self._index = None

    def __len__(self):
        return len(self.z)

    def states(self):
        return [FlowState(float(a), float(b), float(c))
                for a, b, c in zip(self.z, self.rho, self.omega)]

    def indicator(self) -> np.ndarray:
        zw = self.z * self.omega
        return 1.0 - self.y_star ** 2 * zw * zw

    def ascending(self) -> "SolutionProfile":
        if len(self.z) < 2 or self.z[1] > self.z[0]:
            return self
        s = slice(None, None, -1)
        return SolutionProfile(self.y_star, self.z[s], self.rho[s], self.omega[s],
                               self.drho[s], self.domega[s], list(self.segments),
                               list(self.events), self.rho_center, self.farfield_C)

    def restrict(self, lo: float, hi: float) -> "SolutionProfile":
        m = (self.z >= lo) & (self.z <= hi)
        segs = [s for s in self.segments if s.hi > lo and s.lo < hi]
        return SolutionProfile(self.y_star, self.z[m], self.rho[m], self.omega[m],
                               self.drho[m], self.domega[m], segs, list(self.events),
                               self.rho_center, self.farfield_C)

    # dense evaluation -------------------------------------------------
    def _build_index(self):
        segs = sorted(self.segments, key=lambda s: s.lo)
        self._index = (segs, [s.lo for s in segs])

    def dense(self, z: float):
        """(rho, omega), (rho', omega') from the dense representation at z."""
        if self._index is None:
            self._build_index()
        segs, los = self._index
        if not segs:
            raise ValueError("profile carries no dense output")
        i = bisect.bisect_right(los, z) - 1
        i = min(max(i, 0), len(segs) - 1)
        # prefer a segment that actually contains z
        for j in (i, i - 1, i + 1):
            if 0 <= j < len(segs) and segs[j].lo <= z <= segs[j].hi:
                i = j
                break
        else:
            raise ValueError(f"z={z} not covered by the dense output")
        y, dy = segs[i](z)
        return (y[0], y[1]), (dy[0], dy[1])

    def covers(self, z: float) -> bool:
        if self._index is None:
            self._build_index()
        return any(s.lo <= z <= s.hi for s in self._index[0])

    # export -----------------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(profile_csv(self))

    def to_dict(self) -> dict:
        return {
            "y_star": self.y_star,
            "rho_center": self.rho_center,
            "farfield_C": self.farfield_C,
            "events": self.events,
            "z": [float(x) for x in self.z],
            "rho": [float(x) for x in self.rho],
            "omega": [float(x) for x in self.omega],
            "indicator": [float(x) for x in self.indicator()],
        }


def fmt(x: float) -> str:
    return format(float(x) + 0.0, ".17g")  # no "-0"


def profile_csv(profile: SolutionProfile) -> str:
    lines = ["z,rho,omega,indicator"]
    for z, r, w, d in zip(profile.z, profile.rho, profile.omega, profile.indicator()):
        lines.append(",".join(fmt(v) for v in (z, r, w, d)))
    return "\n".join(lines) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def profile_from_dict(d: dict) -> SolutionProfile:
    z = np.asarray(d["z"], dtype=float)
    nan = np.full(len(z), np.nan)
    return SolutionProfile(float(d["y_star"]), z, d["rho"], d["omega"], nan, nan,
                           events=list(d.get("events", [])),
                           rho_center=d.get("rho_center"), farfield_C=d.get("farfield_C"))
