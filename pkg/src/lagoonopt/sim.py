"""Forward replay of a mode sequence with the nonlinear orifice law.

Used to measure how far the linearised optimiser drifts from the orifice
equations. Explicit Euler at ``substep_s`` with the sea level interpolated
linearly inside each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from lagoonopt.core import (
    SECONDS_PER_HOUR,
    InfeasibleError,
    LagoonConfig,
    Mode,
    PriceSeries,
    Schedule,
    TideSeries,
    check_pairing,
)
from lagoonopt.physics import FlowLaw, lagoon_flow, lagoon_power


class SimulationError(InfeasibleError):
    def __init__(self, message: str, step: int, substep: int):
        self.substep = substep
        super().__init__(message, step=step)


@dataclass(frozen=True)
class SimulatedTrajectory:
    """Per-step summary of a nonlinear replay plus the raw sub-step levels.

    Step quantities are means over the step's sub-steps; ``head_m`` is the
    head at the start of each step.
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
    substep_s: float
    z_sub_m: np.ndarray
    q_sub_m3s: np.ndarray
    level_deviation_m: np.ndarray | None = None
    energy_deviation_mwh: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return len(self.modes)


def _n_substeps(dt_s: float, substep_s: float) -> int:
    if not substep_s > 0:
        raise ValueError("substep_s must be positive")
    n = round(dt_s / substep_s)
    if n < 1 or not math.isclose(n * substep_s, dt_s, rel_tol=1e-12):
        raise ValueError(f"sub-step {substep_s} s does not divide the step {dt_s} s")
    return n


def simulate(config: LagoonConfig, tide: TideSeries, modes: Sequence[Mode], substep_s: float = 60.0,
             prices: PriceSeries | None = None, reference: Schedule | None = None) -> SimulatedTrajectory:
    """Replay ``modes`` against the orifice law and the hill chart.

    Filling flow is clamped so one sub-step cannot carry the basin past the
    sea level. Raises SimulationError when the head leaves its bounds.
    When ``reference`` is given its level and energy gaps are stored on the
    result.
    """
    check_pairing(config, tide, prices)
    modes = tuple(modes)
    if len(modes) != tide.n_steps:
        raise ValueError(f"{len(modes)} modes for a horizon of {tide.n_steps} steps")
    n_sub = _n_substeps(config.dt_s, substep_s)
    area = config.surface_area_m2
    lo, hi = config.h_bounds_m
    zout = tide.levels_m

    z = float(zout[0])
    z_sub = [z]
    q_sub = []
    levels = [z]
    heads, energy = [], []
    parts = np.zeros((tide.n_steps, 4))
    for t, mode in enumerate(modes):
        heads.append(z - float(zout[t]))
        e_step = 0.0
        for s in range(n_sub):
            sea = zout[t] + (zout[t + 1] - zout[t]) * (s / n_sub)
            head = z - sea
            if not lo <= head <= hi:
                raise SimulationError(
                    f"head {head:.4f} m left [{lo}, {hi}] at step {t}, sub-step {s}", t, s)
            sluice, tfill, tgen, total = lagoon_flow(mode, head, config, FlowLaw.NONLINEAR)
            if mode.is_fill:
                limit = abs(head) * area / substep_s
                if abs(total) > limit:
                    scale = limit / abs(total)
                    sluice, tfill, total = sluice * scale, tfill * scale, total * scale
            e_step += lagoon_power(mode, head, config) * substep_s / SECONDS_PER_HOUR
            parts[t] += (sluice, tfill, tgen, total)
            q_sub.append(total)
            z = z - total * substep_s / area
            z_sub.append(z)
        levels.append(z)
        energy.append(e_step)
    end_head = z - float(zout[-1])
    if not lo <= end_head <= hi:
        raise SimulationError(f"final head {end_head:.4f} m left [{lo}, {hi}]",
                              tide.n_steps - 1, n_sub)

    parts /= n_sub
    energy = np.array(energy)
    price = prices.prices if prices is not None else np.zeros(len(modes))
    level_dev = energy_dev = None
    if reference is not None:
        if reference.n_steps != len(modes):
            raise ValueError("reference schedule has a different horizon")
        level_dev = np.array(levels) - reference.z_in_m
        energy_dev = energy - reference.energy_mwh
    return SimulatedTrajectory(
        modes=modes,
        z_out_m=np.array(zout),
        z_in_m=np.array(levels),
        head_m=np.array(heads),
        q_total_m3s=parts[:, 3].copy(),
        q_sluice_m3s=parts[:, 0].copy(),
        q_turbine_fill_m3s=parts[:, 1].copy(),
        q_turbine_gen_m3s=parts[:, 2].copy(),
        power_mw=energy * SECONDS_PER_HOUR / config.dt_s,
        energy_mwh=energy,
        revenue=np.asarray(price, dtype=float) * energy,
        dt_s=config.dt_s,
        surface_area_m2=area,
        substep_s=float(substep_s),
        z_sub_m=np.array(z_sub),
        q_sub_m3s=np.array(q_sub),
        level_deviation_m=level_dev,
        energy_deviation_mwh=energy_dev,
    )


@dataclass(frozen=True)
class DeviationReport:
    energy_abs_mwh: np.ndarray
    level_abs_m: np.ndarray
    revenue_abs: np.ndarray
    total_energy_schedule: float
    total_energy_sim: float
    total_revenue_schedule: float
    total_revenue_sim: float

    @property
    def relative_energy_gap(self) -> float:
        if self.total_energy_schedule == 0.0:
            return 0.0 if self.total_energy_sim == 0.0 else math.inf
        return abs(self.total_energy_sim - self.total_energy_schedule) / abs(self.total_energy_schedule)

    def stats(self) -> dict[str, dict[str, float]]:
        out = {}
        for name, values in (("energy_mwh", self.energy_abs_mwh), ("level_m", self.level_abs_m),
                             ("revenue", self.revenue_abs)):
            out[name] = {
                "max": float(values.max()) if len(values) else 0.0,
                "rms": float(np.sqrt(np.mean(values ** 2))) if len(values) else 0.0,
                "total": float(values.sum()),
            }
        return out


def compare(schedule: Schedule, sim: SimulatedTrajectory) -> DeviationReport:
    """Per-step absolute gaps between a linearised schedule and its replay."""
    if schedule.n_steps != sim.n_steps:
        raise ValueError(f"horizon mismatch: {schedule.n_steps} vs {sim.n_steps} steps")
    return DeviationReport(
        energy_abs_mwh=np.abs(sim.energy_mwh - schedule.energy_mwh),
        level_abs_m=np.abs(sim.z_in_m - schedule.z_in_m),
        revenue_abs=np.abs(sim.revenue - schedule.revenue),
        total_energy_schedule=float(schedule.energy_mwh.sum()),
        total_energy_sim=float(sim.energy_mwh.sum()),
        total_revenue_schedule=float(schedule.revenue.sum()),
        total_revenue_sim=float(sim.revenue.sum()),
    )
