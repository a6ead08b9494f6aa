"""Solver configuration and its TOML loader."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError


@dataclass(frozen=True)
class SolverConfig:
    tol_ode: float = 1e-11
    tol_outer: float = 1e-13       # rightward run from the sonic point
    tol_y: float = 1e-10
    n_max: int = 80
    handoff: float = 0.05          # h = min(handoff, radius/2) at each singular point
    z_min: float = 1e-6
    z_max: float = 100.0
    eps_sonic: float = 1e-12
    eps_event: float = 1e-10
    delta_classify: float = 1e-10
    tol_match: float = 1e-6
    tol_guard: float = 1e-8
    r_cap: float = 0.5
    z_match: float = 0.1           # upper end of the centre/inner overlap
    richardson: Tuple[float, ...] = (4e-3, 2e-3, 1e-3)
    eta: float = 0.05
    bracket: Tuple[float, float] = (2.0, 3.0)
    refine_y_bar: bool = True
    out_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("tol_ode", "tol_outer", "tol_y", "eps_sonic", "eps_event", "delta_classify",
                     "tol_match", "tol_guard", "r_cap", "eta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if not (0 < self.z_min < self.handoff < 1 < self.z_max):
            raise ConfigError("need 0 < z_min < handoff < 1 < z_max, got "
                              f"z_min={self.z_min}, handoff={self.handoff}, z_max={self.z_max}")
        if self.z_max < 10:
            raise ConfigError("z_max must be at least 10")
        if int(self.n_max) != self.n_max or self.n_max < 10:
            raise ConfigError(f"n_max must be an integer >= 10, got {self.n_max!r}")
        if self.tol_y < 1e-12:
            raise ConfigError("tol_y must be >= 1e-12")
        lo, hi = self.bracket
        if not lo < hi:
            raise ConfigError(f"bracket must satisfy lo < hi, got {self.bracket}")
        if not 0 < self.z_match < 1:
            raise ConfigError("z_match must lie in (0, 1)")

    def replace(self, **kw) -> "SolverConfig":
        return dataclasses.replace(self, **kw)

    def tolerances(self) -> dict:
        return {k: getattr(self, k) for k in ("tol_ode", "tol_outer", "tol_y", "n_max", "eps_sonic",
                                              "eps_event", "delta_classify", "tol_match",
                                              "tol_guard", "z_min", "z_max", "handoff")}


_FIELDS = {f.name: f for f in dataclasses.fields(SolverConfig)}


def _coerce(name, value):
    default = _FIELDS[name].default
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) for v in value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name}: {value!r}") from None


def config_from_mapping(data: dict, base: Optional[SolverConfig] = None) -> SolverConfig:
    kw = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        kw[name] = _coerce(name, value)
    return dataclasses.replace(base or SolverConfig(), **kw)


def load_config(path) -> SolverConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    # allow an optional [solver] table
    if "solver" in data and isinstance(data["solver"], dict):
        data = {**{k: v for k, v in data.items() if k != "solver"}, **data["solver"]}
    return config_from_mapping(data)

