"""Flow and power curves of the lagoon: orifice law, its linear stand-in and
the turbine hill chart."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from lagoonopt.core import (
    HILL_BREAK_HIGH,
    HILL_BREAK_LOW,
    HILL_HEAD_MAX,
    SECONDS_PER_HOUR,
    LagoonConfig,
    Mode,
)

DEFAULT_FIT_RANGE = (0.5, 7.0)
DEFAULT_FIT_SAMPLES = 1000
MAX_LINEAR_HEAD = 7.0

# Affine branches (intercept, slope) above the start-up head.
GEN_FLOW_BRANCHES = ((92.99, 77.60), (337.60, 14.81), (807.19, -52.83))
POWER_BRANCHES = ((-3.33, 3.33), (-3.33, 3.33), (20.0, 0.0))


class FlowLaw(str, enum.Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-affine function of head on ``[breakpoints[0], breakpoints[-1]]``.

    Intervals are left-closed/right-open except the last, which is closed, so
    every head maps to exactly one segment.
    """

    breakpoints: tuple[float, ...]
    segments: tuple[tuple[float, float], ...]  # (intercept, slope) per interval

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        segs = tuple((float(a), float(b)) for a, b in self.segments)
        if len(bp) != len(segs) + 1:
            raise ValueError("need exactly one more breakpoint than segments")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValueError(f"breakpoints must be strictly ascending: {bp}")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "segments", segs)

    @property
    def domain(self) -> tuple[float, float]:
        return self.breakpoints[0], self.breakpoints[-1]

    def segment_index(self, x: float) -> int:
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise ValueError(f"head {x} outside curve domain [{lo}, {hi}]")
        for k in range(len(self.segments) - 1):
            if x < self.breakpoints[k + 1]:
                return k
        return len(self.segments) - 1

    def __call__(self, x: float) -> float:
        a, b = self.segments[self.segment_index(x)]
        return a + b * x

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        bp = np.array(self.breakpoints)
        return bp, np.array([a for a, _ in self.segments]), np.array([b for _, b in self.segments])


def gen_flow_curve(h_min: float = 1.0) -> PiecewiseLinear:
    return PiecewiseLinear((0.0, h_min, HILL_BREAK_LOW, HILL_BREAK_HIGH, HILL_HEAD_MAX),
                           ((0.0, 0.0),) + GEN_FLOW_BRANCHES)


def power_curve(h_min: float = 1.0) -> PiecewiseLinear:
    # 3.9 is kept as a breakpoint so both curves share one segment layout.
    return PiecewiseLinear((0.0, h_min, HILL_BREAK_LOW, HILL_BREAK_HIGH, HILL_HEAD_MAX),
                           ((0.0, 0.0),) + POWER_BRANCHES)


def orifice_flow(head_m: float, coeff: float, area_m2: float, g: float = 9.81) -> float:
    """Signed orifice discharge ``sign(H) C A sqrt(2 g |H|)``."""
    q = coeff * area_m2 * math.sqrt(2.0 * g * abs(head_m))
    return math.copysign(q, head_m) if head_m != 0 else 0.0


def linear_fill_flow(head_m: float, k: float, area_m2: float) -> float:
    return k * area_m2 * head_m


def fit_linear_coefficient(h_lo: float, h_hi: float, coeff: float = 1.0, g: float = 9.81,
                           n_samples: int = DEFAULT_FIT_SAMPLES) -> float:
    """Least-squares slope through the origin approximating ``C sqrt(2 g H)``.

    Heads are sampled uniformly on ``[h_lo, h_hi]`` (a single sample sits at
    ``h_lo``).
    """
    if not h_lo < h_hi:
        raise ValueError(f"degenerate fit range [{h_lo}, {h_hi}]")
    if h_lo <= 0 or h_hi > MAX_LINEAR_HEAD:
        raise ValueError(f"fit range must lie within (0, {MAX_LINEAR_HEAD}] m")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    heads = np.linspace(h_lo, h_hi, n_samples)
    target = coeff * np.sqrt(2.0 * g * heads)
    return float(np.dot(target, heads) / np.dot(heads, heads))


def _check_hill_domain(head_m: float) -> None:
    if not 0.0 <= head_m <= HILL_HEAD_MAX:
        raise ValueError(f"hill chart is defined on [0, {HILL_HEAD_MAX}] m, got head {head_m}")


def turbine_gen_flow(head_m: float, h_min: float = 1.0) -> float:
    """Flow through one generating turbine (m³/s)."""
    _check_hill_domain(head_m)
    return gen_flow_curve(h_min)(head_m)


def turbine_power(head_m: float, h_min: float = 1.0) -> float:
    """Electrical output of one turbine (MW)."""
    _check_hill_domain(head_m)
    return power_curve(h_min)(head_m)


class FlowComponents(NamedTuple):
    sluice: float
    turbine_fill: float
    turbine_gen: float
    total: float


def lagoon_flow(mode: Mode, head_m: float, config: LagoonConfig,
                flow_law: FlowLaw = FlowLaw.LINEAR) -> FlowComponents:
    """Flow through the whole structure for one operating mode.

    Components are summed over all gates/turbines; positive means outflow.
    """
    lo, hi = config.h_bounds_m
    if not lo <= head_m <= hi:
        raise ValueError(f"head {head_m} outside bounds [{lo}, {hi}]")
    if mode.is_fill:
        if FlowLaw(flow_law) is FlowLaw.LINEAR:
            sluice = config.n_sluices * linear_fill_flow(head_m, config.k_sluice, config.sluice_area_m2)
            tfill = config.n_turbines * linear_fill_flow(head_m, config.k_turbine,
                                                         config.turbine_flow_area_m2)
        else:
            g = config.gravity_ms2
            sluice = config.n_sluices * orifice_flow(head_m, config.discharge_coeff_sluice,
                                                     config.sluice_area_m2, g)
            tfill = config.n_turbines * orifice_flow(head_m, config.discharge_coeff_turbine,
                                                     config.turbine_flow_area_m2, g)
        return FlowComponents(sluice, tfill, 0.0, sluice + tfill)
    if mode.is_generate:
        if mode.n_active > config.n_turbines:
            raise ValueError(f"{mode.n_active} active turbines exceeds fleet of {config.n_turbines}")
        gen = 0.0
        if head_m >= config.h_min_m:
            gen = mode.n_active * turbine_gen_flow(head_m, config.h_min_m)
        return FlowComponents(0.0, 0.0, gen, gen)
    return FlowComponents(0.0, 0.0, 0.0, 0.0)


def lagoon_power(mode: Mode, head_m: float, config: LagoonConfig) -> float:
    if not mode.is_generate or head_m < config.h_min_m:
        return 0.0
    return mode.n_active * turbine_power(head_m, config.h_min_m)


def step_level(z_in_m: float, total_flow_m3s: float, surface_area_m2: float, dt_s: float) -> float:
    """Basin level after one step of net outflow ``total_flow_m3s``."""
    return z_in_m - total_flow_m3s * dt_s / surface_area_m2


def energy_mwh(power_mw: float, dt_s: float) -> float:
    return power_mw * dt_s / SECONDS_PER_HOUR


def curve_values(curve: PiecewiseLinear, heads: Sequence[float]) -> np.ndarray:
    return np.array([curve(h) for h in heads])
