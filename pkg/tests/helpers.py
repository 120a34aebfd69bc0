"""Instances and probes shared by several test modules."""

import numpy as np

from lagoonopt import Mode, Schedule, swansea_config
from lagoonopt.core import PriceSeries, TideSeries


def tiny_instance(seed):
    rng = np.random.default_rng(seed)
    steps = int(rng.integers(3, 7))
    n_turbines = int(rng.integers(1, 3))
    config = swansea_config(n_turbines=n_turbines, surface_area_m2=float(rng.uniform(0.3e6, 2e6)),
                            n_sluices=int(rng.integers(1, 3)))
    amp = rng.uniform(1.0, 2.5)
    phase = rng.uniform(0, 2 * np.pi)
    # a compressed tide so a handful of steps holds a fill-hold-generate cycle
    period = rng.uniform(3 * 1800.0, 8 * 1800.0)
    k = np.arange(steps + 1)
    levels = amp * np.sin(2 * np.pi * k * 1800.0 / period + phase)
    tide = TideSeries("0", 1800.0, levels)
    prices = PriceSeries("0", 1800.0, rng.uniform(-10.0, 120.0, steps))
    objective = "max-revenue" if seed % 2 else "max-energy"
    return config, tide, prices, objective


def implied_interval(model, var, tags, values):
    """Tightest [lo, hi] the tagged rows allow for ``var`` with every other variable fixed."""
    lo, hi = -np.inf, np.inf
    for row in model.constraints:
        if row.tag not in tags:
            continue
        coeff = dict(row.coeffs).get(var)
        if not coeff:
            continue
        rest = sum(c * values[v] for v, c in row.coeffs if v != var)
        bound = (row.rhs - rest) / coeff
        if row.sense == "=":
            lo, hi = max(lo, bound), min(hi, bound)
        elif (row.sense == "<=") == (coeff > 0):
            hi = min(hi, bound)
        else:
            lo = max(lo, bound)
    return lo, hi


def level_schedule(config, head):
    """One idle step with the basin ``head`` above a still sea at 0."""
    return Schedule(
        modes=(Mode.hold(),), z_out_m=[0.0, 0.0], z_in_m=[head, head], head_m=[head],
        q_total_m3s=[0.0], q_sluice_m3s=[0.0], q_turbine_fill_m3s=[0.0], q_turbine_gen_m3s=[0.0],
        power_mw=[0.0], energy_mwh=[0.0], revenue=[0.0], dt_s=config.dt_s,
        surface_area_m2=config.surface_area_m2)
