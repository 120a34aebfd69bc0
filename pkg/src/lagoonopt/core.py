"""Shared domain types for the lagoon optimizer.

Units: lengths in metres, areas in m², flows in m³/s (positive = out of the
basin), power in MW, energy in MWh and time in seconds. The step length
``dt_s`` is always seconds; energy conversions divide by 3600.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

SECONDS_PER_HOUR = 3600.0

# Hill-chart breakpoints that do not depend on configuration (m).
HILL_BREAK_LOW = 3.9
HILL_BREAK_HIGH = 7.0
HILL_HEAD_MAX = 8.0


class ConfigError(ValueError):
    """Raised when a LagoonConfig violates one or more invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid lagoon config: " + "; ".join(self.violations))


class InfeasibleError(RuntimeError):
    """No feasible operating schedule exists (or a replay left the head bounds)."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message)


class Objective(str, enum.Enum):
    MAX_ENERGY = "max-energy"
    MAX_REVENUE = "max-revenue"


class ModeKind(str, enum.Enum):
    HOLD = "hold"
    FILL = "fill"
    GENERATE = "generate"


@dataclass(frozen=True, order=True)
class Mode:
    """Operating decision for one step.

    ``n_active`` is the number of generating turbines and is zero unless
    ``kind`` is GENERATE.
    """

    kind: ModeKind
    n_active: int = 0

    def __post_init__(self):
        if self.kind is ModeKind.GENERATE:
            if self.n_active < 1:
                raise ValueError("Generate needs at least one active turbine")
        elif self.n_active != 0:
            raise ValueError(f"{self.kind.value} mode cannot have active turbines")

    @classmethod
    def hold(cls) -> Mode:
        return cls(ModeKind.HOLD)

    @classmethod
    def fill(cls) -> Mode:
        return cls(ModeKind.FILL)

    @classmethod
    def generate(cls, n_active: int) -> Mode:
        return cls(ModeKind.GENERATE, int(n_active))

    @property
    def is_fill(self) -> bool:
        return self.kind is ModeKind.FILL

    @property
    def is_generate(self) -> bool:
        return self.kind is ModeKind.GENERATE

    def __str__(self) -> str:
        if self.is_generate:
            return f"generate:{self.n_active}"
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> Mode:
        text = text.strip().lower()
        if text in ("hold", "fill"):
            return cls(ModeKind(text))
        name, _, count = text.partition(":")
        if name == "generate" and count.isdigit():
            return cls.generate(int(count))
        raise ValueError(f"unrecognised mode {text!r}")


@dataclass(frozen=True)
class LagoonConfig:
    """Physical and operational parameters of an ebb-generation lagoon.

    ``k_sluice`` / ``k_turbine`` are the coefficients of the linear fill-flow
    law. Left as None they are fitted to the orifice law over 0.5-7 m head
    with the configured discharge coefficient.
    """

    surface_area_m2: float = 11.5e6
    n_turbines: int = 16
    turbine_capacity_mw: float = 20.0
    turbine_flow_area_m2: float = 42.0
    n_sluices: int = 8
    sluice_area_m2: float = 100.0
    discharge_coeff_sluice: float = 1.0
    discharge_coeff_turbine: float = 1.0
    k_sluice: float | None = None
    k_turbine: float | None = None
    h_min_m: float = 1.0
    h_bounds_m: tuple[float, float] = (-2.0, 8.0)
    dt_s: float = 1800.0
    gravity_ms2: float = 9.81

    def __post_init__(self):
        object.__setattr__(self, "h_bounds_m", tuple(float(v) for v in self.h_bounds_m))
        # Fitting is skipped for broken inputs so validate_config can report them.
        from lagoonopt.physics import DEFAULT_FIT_RANGE, fit_linear_coefficient

        lo, hi = DEFAULT_FIT_RANGE
        for attr, coeff in (("k_sluice", self.discharge_coeff_sluice),
                            ("k_turbine", self.discharge_coeff_turbine)):
            if getattr(self, attr) is None and coeff > 0 and self.gravity_ms2 > 0:
                object.__setattr__(self, attr, fit_linear_coefficient(lo, hi, coeff, self.gravity_ms2))

    @property
    def h_lo(self) -> float:
        return self.h_bounds_m[0]

    @property
    def h_hi(self) -> float:
        return self.h_bounds_m[1]

    @property
    def rated_mw(self) -> float:
        return self.n_turbines * self.turbine_capacity_mw

    @property
    def dt_h(self) -> float:
        return self.dt_s / SECONDS_PER_HOUR

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["h_bounds_m"] = list(self.h_bounds_m)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> LagoonConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError([f"unknown config field {name!r}" for name in sorted(unknown)])
        data = dict(data)
        if "h_bounds_m" in data:
            data["h_bounds_m"] = tuple(data["h_bounds_m"])
        return cls(**data)


def swansea_config(**overrides: Any) -> LagoonConfig:
    """Swansea Bay lagoon: 16 x 20 MW turbines, 11.5 km² basin, 800 m² of sluices."""
    return LagoonConfig(**overrides)


def config_violations(config: LagoonConfig) -> list[str]:
    problems = []
    areas = {
        "surface_area_m2": config.surface_area_m2,
        "turbine_flow_area_m2": config.turbine_flow_area_m2,
        "sluice_area_m2": config.sluice_area_m2,
    }
    for name, value in areas.items():
        if not (value > 0):
            problems.append(f"non-positive area: {name}={value}")
    if config.n_turbines < 1:
        problems.append(f"n_turbines must be >= 1 (got {config.n_turbines})")
    if config.n_sluices < 1:
        problems.append(f"n_sluices must be >= 1 (got {config.n_sluices})")
    if config.turbine_capacity_mw <= 0:
        problems.append("turbine_capacity_mw must be positive")
    if len(config.h_bounds_m) != 2:
        problems.append("h_bounds_m must be a (lo, hi) pair")
        return problems
    lo, hi = config.h_bounds_m
    if not lo < 0:
        problems.append(f"lower head bound must be negative (got {lo})")
    if not (0 < config.h_min_m < hi):
        problems.append("h_min must be positive and below upper head bound")
    if not config.h_min_m < HILL_BREAK_LOW:
        problems.append(f"h_min must be below the hill-chart breakpoint {HILL_BREAK_LOW} m")
    if hi > HILL_HEAD_MAX:
        problems.append(f"upper head bound {hi} exceeds the hill-chart range ({HILL_HEAD_MAX} m)")
    if not config.dt_s > 0:
        problems.append("dt_s must be positive")
    if not config.gravity_ms2 > 0:
        problems.append("gravity_ms2 must be positive")
    for name in ("discharge_coeff_sluice", "discharge_coeff_turbine"):
        value = getattr(config, name)
        if not (0 < value <= 1.5):
            problems.append(f"{name} must lie in (0, 1.5] (got {value})")
    for name in ("k_sluice", "k_turbine"):
        value = getattr(config, name)
        if value is None or not (value > 0) or not math.isfinite(value):
            problems.append(f"{name} must be a positive finite number (got {value})")
    return problems


def validate_config(config: LagoonConfig) -> LagoonConfig:
    """Return ``config`` unchanged, or raise ConfigError listing every violation."""
    problems = config_violations(config)
    if problems:
        raise ConfigError(problems)
    return config


def _as_levels(values: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TideSeries:
    """Sea level at every step boundary: ``levels_m`` has T+1 entries."""

    t0: str
    dt_s: float
    levels_m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "levels_m", _as_levels(self.levels_m, "tide levels"))
        if len(self.levels_m) < 2:
            raise ValueError("a tide series needs at least two levels")
        if not self.dt_s > 0:
            raise ValueError("dt_s must be positive")

    @property
    def n_steps(self) -> int:
        return len(self.levels_m) - 1

    def shifted(self, offset_m: float) -> TideSeries:
        return TideSeries(self.t0, self.dt_s, self.levels_m + offset_m)


@dataclass(frozen=True)
class PriceSeries:
    """Day-ahead price per step (currency/MWh); negative prices are allowed."""

    t0: str
    dt_s: float
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "prices", _as_levels(self.prices, "prices"))
        if len(self.prices) < 1:
            raise ValueError("a price series needs at least one value")

    @property
    def n_steps(self) -> int:
        return len(self.prices)

    @classmethod
    def flat(cls, value: float, n_steps: int, dt_s: float = 1800.0, t0: str = "0") -> PriceSeries:
        return cls(t0, dt_s, np.full(n_steps, float(value)))


def check_pairing(config: LagoonConfig, tide: TideSeries, prices: PriceSeries | None = None) -> None:
    if tide.dt_s != config.dt_s:
        raise ValueError(f"tide step {tide.dt_s} s does not match config dt_s {config.dt_s} s")
    if prices is not None:
        if prices.n_steps != tide.n_steps:
            raise ValueError(
                f"price series has {prices.n_steps} steps but the tide defines {tide.n_steps}")
        if prices.dt_s != tide.dt_s:
            raise ValueError("price and tide step lengths differ")


@dataclass(frozen=True)
class Schedule:
    """Decision and state trajectory over T steps.

    Flow components are totals over all gates/turbines; head is taken at the
    start of each step.
    """

    modes: tuple[Mode, ...]
    z_out_m: np.ndarray
    z_in_m: np.ndarray
    head_m: np.ndarray
    q_total_m3s: np.ndarray
    q_sluice_m3s: np.ndarray
    q_turbine_fill_m3s: np.ndarray
    q_turbine_gen_m3s: np.ndarray
    power_mw: np.ndarray
    energy_mwh: np.ndarray
    revenue: np.ndarray
    dt_s: float
    surface_area_m2: float

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        n = len(self.modes)
        for name in self._level_fields:
            arr = np.asarray(getattr(self, name), dtype=float)
            if len(arr) != n + 1:
                raise ValueError(f"{name} must have {n + 1} entries, got {len(arr)}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in self._step_fields:
            arr = np.asarray(getattr(self, name), dtype=float)
            if len(arr) != n:
                raise ValueError(f"{name} must have {n} entries, got {len(arr)}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    _level_fields = ("z_out_m", "z_in_m")
    _step_fields = ("head_m", "q_total_m3s", "q_sluice_m3s", "q_turbine_fill_m3s",
                    "q_turbine_gen_m3s", "power_mw", "energy_mwh", "revenue")

    @property
    def n_steps(self) -> int:
        return len(self.modes)

    def end_head_m(self) -> float:
        return float(self.z_in_m[-1] - self.z_out_m[-1])

    def replace(self, **changes: Any) -> Schedule:
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        data.update(changes)
        return Schedule(**data)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"modes": [str(m) for m in self.modes]}
        for name in self._level_fields + self._step_fields:
            data[name] = [float(v) for v in getattr(self, name)]
        data["dt_s"] = self.dt_s
        data["surface_area_m2"] = self.surface_area_m2
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Schedule:
        fields = {name: data[name] for name in cls._level_fields + cls._step_fields}
        return cls(modes=tuple(Mode.parse(m) for m in data["modes"]),
                   dt_s=float(data["dt_s"]), surface_area_m2=float(data["surface_area_m2"]),
                   **fields)


def schedule_violations(schedule: Schedule, h_bounds_m: tuple[float, float] | None = None,
                        rtol: float = 1e-12) -> list[str]:
    """Check the mass-balance, head and energy identities of a schedule.

    Independent of any solver. Returns human-readable violations (empty when
    the schedule is self-consistent).
    """
    problems = []
    dz = schedule.q_total_m3s * schedule.dt_s / schedule.surface_area_m2
    scale = 1.0 + np.abs(schedule.z_in_m[:-1])
    bad = np.abs(schedule.z_in_m[1:] - (schedule.z_in_m[:-1] - dz)) > rtol * scale
    problems += [f"mass balance broken at step {t}" for t in np.flatnonzero(bad)]
    head = schedule.z_in_m[:-1] - schedule.z_out_m[:-1]
    bad = np.abs(schedule.head_m - head) > rtol * (1.0 + np.abs(head))
    problems += [f"head identity broken at step {t}" for t in np.flatnonzero(bad)]
    energy = schedule.power_mw * schedule.dt_s / SECONDS_PER_HOUR
    bad = np.abs(schedule.energy_mwh - energy) > rtol * (1.0 + np.abs(energy))
    problems += [f"energy identity broken at step {t}" for t in np.flatnonzero(bad)]
    parts = schedule.q_sluice_m3s + schedule.q_turbine_fill_m3s + schedule.q_turbine_gen_m3s
    bad = np.abs(schedule.q_total_m3s - parts) > rtol * (1.0 + np.abs(parts))
    problems += [f"flow components do not sum at step {t}" for t in np.flatnonzero(bad)]
    if h_bounds_m is not None:
        lo, hi = h_bounds_m
        heads = schedule.z_in_m - schedule.z_out_m
        for t in np.flatnonzero((heads < lo) | (heads > hi)):
            problems.append(f"head {heads[t]:.4f} m outside [{lo}, {hi}] at boundary {t}")
    return problems


@dataclass(frozen=True)
class SolverResult:
    schedule: Schedule
    objective: Objective
    objective_value: float
    solver_stats: dict[str, Any] = field(default_factory=dict, compare=False)


def evaluate_objective(schedule: Schedule, prices: PriceSeries | None, objective: Objective) -> float:
    """Total energy (MWh) or total revenue of a schedule."""
    objective = Objective(objective)
    if objective is Objective.MAX_ENERGY:
        return float(sum(float(e) for e in schedule.energy_mwh))
    if prices is None:
        raise ValueError("revenue objective needs a price series")
    if prices.n_steps != schedule.n_steps:
        raise ValueError(
            f"length mismatch: {schedule.n_steps} schedule steps vs {prices.n_steps} prices")
    return float(sum(float(c) * float(e) for c, e in zip(prices.prices, schedule.energy_mwh)))


def objective_weights(objective: Objective, prices: PriceSeries | None, n_steps: int) -> np.ndarray:
    """Per-step multiplier on energy: 1 for energy, the price for revenue."""
    objective = Objective(objective)
    if objective is Objective.MAX_ENERGY:
        return np.ones(n_steps)
    if prices is None:
        raise ValueError("revenue objective needs a price series")
    if prices.n_steps != n_steps:
        raise ValueError(f"length mismatch: {n_steps} steps vs {prices.n_steps} prices")
    return np.array(prices.prices, dtype=float)
