"""Storage capability of the basin and scalar schedule summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lagoonopt.core import (
    LagoonConfig,
    PriceSeries,
    Schedule,
    TideSeries,
    evaluate_objective,
    Objective,
)
from lagoonopt.physics import energy_mwh, turbine_power


@dataclass(frozen=True)
class StorageProfile:
    """Energy the full basin could deliver in one step, step by step."""

    stored_energy_mwh: np.ndarray
    head_m: np.ndarray
    z_max_m: float


def storage_profile(config: LagoonConfig, tide: TideSeries) -> StorageProfile:
    """Hold the basin at the highest sea level of the window and let the sea move.

    Head at each step start is clipped to the head bounds before the power
    curve is applied; the whole fleet generates.
    """
    levels = tide.levels_m[:-1]
    z_max = float(np.max(tide.levels_m))
    head = np.clip(z_max - levels, config.h_lo, config.h_hi)
    stored = np.array([
        energy_mwh(config.n_turbines * (turbine_power(h, config.h_min_m) if h >= 0 else 0.0),
                   config.dt_s)
        for h in head
    ])
    return StorageProfile(stored_energy_mwh=stored, head_m=head, z_max_m=z_max)


@dataclass(frozen=True)
class Totals:
    energy_mwh: float
    revenue: float
    capacity_factor: float


def summarize(schedule: Schedule, prices: PriceSeries | None, config: LagoonConfig) -> Totals:
    energy = evaluate_objective(schedule, None, Objective.MAX_ENERGY)
    revenue = 0.0
    if prices is not None:
        revenue = evaluate_objective(schedule, prices, Objective.MAX_REVENUE)
    horizon_h = schedule.n_steps * schedule.dt_s / 3600.0
    return Totals(energy_mwh=energy, revenue=revenue,
                  capacity_factor=energy / (config.rated_mw * horizon_h))
