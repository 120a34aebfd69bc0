"""Dynamic programming over a discretised basin level.

The search runs on a uniform level grid anchored at the initial sea level;
the next level is rounded to the nearest grid point. The returned schedule
replays the chosen modes with unrounded levels so its trajectory satisfies
the mass balance exactly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from lagoonopt import kernels
from lagoonopt._kernels_py import grid_index as _py_grid_index
from lagoonopt._kernels_py import step as _py_step
from lagoonopt.core import (
    InfeasibleError,
    LagoonConfig,
    Mode,
    Objective,
    PriceSeries,
    Schedule,
    SolverResult,
    TideSeries,
    check_pairing,
    evaluate_objective,
    objective_weights,
    validate_config,
)
from lagoonopt.physics import (
    energy_mwh,
    gen_flow_curve,
    lagoon_flow,
    lagoon_power,
    power_curve,
    step_level,
)

TIE_BREAK = "fewest-turbines"
ENUMERATION_LIMIT = 10_000_000


@dataclass(frozen=True)
class DpParams:
    """Grid settings. ``level_range_m`` defaults to the span the head bounds allow."""

    level_resolution_m: float = 0.01
    level_range_m: tuple[float, float] | None = None
    tie_break: str = TIE_BREAK

    def __post_init__(self):
        if not self.level_resolution_m > 0:
            raise ValueError("level_resolution_m must be positive")
        if self.tie_break != TIE_BREAK:
            raise ValueError(f"only the {TIE_BREAK!r} tie-break is supported")


def action_set(config: LagoonConfig) -> list[Mode]:
    """Hold, Fill, then Generate(1..n): the order doubles as the tie-break."""
    return [Mode.hold(), Mode.fill()] + [Mode.generate(n) for n in range(1, config.n_turbines + 1)]


def action_code(mode: Mode) -> int:
    if mode.is_generate:
        return 1 + mode.n_active
    return 1 if mode.is_fill else 0


@dataclass(frozen=True)
class KernelProblem:
    """Flat numeric view of one instance, consumed by both kernel backends."""

    zout: np.ndarray
    weights: np.ndarray
    bp: tuple[float, ...]
    flow_a: tuple[float, ...]
    flow_b: tuple[float, ...]
    power_a: tuple[float, ...]
    power_b: tuple[float, ...]
    n_steps: int
    n_states: int
    n_actions: int
    j0: int
    z_ref: float
    dz: float
    h_lo: float
    h_hi: float
    h_min: float
    dt_s: float
    area: float
    c_sluice: float
    c_turbine: float
    n_sluices: float
    n_turbines: float
    extras: dict = field(default_factory=dict, compare=False)

    def grid_level(self, j: int) -> float:
        return self.z_ref + float(j - self.j0) * self.dz


def build_problem(config: LagoonConfig, tide: TideSeries, weights: np.ndarray,
                  params: DpParams) -> KernelProblem:
    zout = np.array(tide.levels_m, dtype=float)
    dz = params.level_resolution_m
    z_ref = float(zout[0])
    if params.level_range_m is None:
        z_lo = float(zout.min()) + config.h_lo
        z_hi = float(zout.max()) + config.h_hi
    else:
        z_lo, z_hi = map(float, params.level_range_m)
        if not z_lo <= z_ref <= z_hi:
            raise ValueError("level range must contain the initial sea level")
    j0 = int(math.ceil((z_ref - z_lo) / dz - 1e-9))
    n_states = j0 + int(math.ceil((z_hi - z_ref) / dz - 1e-9)) + 1
    flow = gen_flow_curve(config.h_min_m)
    power = power_curve(config.h_min_m)
    return KernelProblem(
        zout=zout,
        weights=np.array(weights, dtype=float),
        bp=flow.breakpoints,
        flow_a=tuple(a for a, _ in flow.segments),
        flow_b=tuple(b for _, b in flow.segments),
        power_a=tuple(a for a, _ in power.segments),
        power_b=tuple(b for _, b in power.segments),
        n_steps=tide.n_steps,
        n_states=n_states,
        n_actions=config.n_turbines + 2,
        j0=j0,
        z_ref=z_ref,
        dz=dz,
        h_lo=config.h_lo,
        h_hi=config.h_hi,
        h_min=config.h_min_m,
        dt_s=config.dt_s,
        area=config.surface_area_m2,
        # grouped exactly as physics.linear_fill_flow evaluates k * A * H
        c_sluice=config.k_sluice * config.sluice_area_m2,
        c_turbine=config.k_turbine * config.turbine_flow_area_m2,
        n_sluices=float(config.n_sluices),
        n_turbines=float(config.n_turbines),
    )


def transition(z_in_m: float, t: int, mode: Mode, config: LagoonConfig, tide: TideSeries):
    """Advance the basin one step under the linear flow law.

    Returns ``(next_level_m, energy_mwh)``, or None when the move is
    infeasible (head out of bounds at either end of the step, or generating
    below the start-up head).
    """
    if not 0 <= t < tide.n_steps:
        raise IndexError(f"step {t} outside horizon of {tide.n_steps}")
    if mode.is_generate and mode.n_active > config.n_turbines:
        raise ValueError(f"{mode.n_active} active turbines exceeds fleet of {config.n_turbines}")
    problem = build_problem(config, tide, np.ones(tide.n_steps), DpParams())
    return _py_step(problem, float(z_in_m), t, action_code(mode))


def _first_hold_violation(config: LagoonConfig, tide: TideSeries) -> int | None:
    z = tide.levels_m[0]
    heads = z - tide.levels_m
    bad = np.flatnonzero((heads < config.h_lo) | (heads > config.h_hi))
    return int(bad[0]) if len(bad) else None


def _no_solution(config: LagoonConfig, tide: TideSeries) -> InfeasibleError:
    step = _first_hold_violation(config, tide)
    if step is not None:
        return InfeasibleError(
            f"no feasible schedule: holding from the initial level leaves the head bounds at "
            f"step boundary {step} and no mode sequence on the grid keeps it inside", step=step)
    return InfeasibleError("no feasible schedule exists on this level grid")


def replay_modes(config: LagoonConfig, tide: TideSeries, modes, prices: PriceSeries | None = None,
                 repair: bool = True) -> tuple[Schedule, list[int]]:
    """Re-simulate ``modes`` with continuous levels and the linear flow law.

    A mode that is infeasible from the unrounded level is replaced by the
    first feasible mode in tie-break order when ``repair`` is set. Returns the
    schedule and the indices of repaired steps.
    """
    check_pairing(config, tide, prices)
    modes = list(modes)
    if len(modes) != tide.n_steps:
        raise ValueError(f"{len(modes)} modes for a horizon of {tide.n_steps} steps")
    problem = build_problem(config, tide, np.ones(tide.n_steps), DpParams())
    candidates = action_set(config)
    zout = tide.levels_m
    z = float(zout[0])
    levels = [z]
    chosen, heads, parts, powers, repaired = [], [], [], [], []
    for t, mode in enumerate(modes):
        order = [mode] + ([m for m in candidates if m != mode] if repair else [])
        for option in order:
            if _py_step(problem, z, t, action_code(option)) is not None:
                break
        else:
            raise InfeasibleError(f"no feasible mode from level {z:.4f} m at step {t}", step=t)
        if option != mode:
            repaired.append(t)
        head = z - float(zout[t])
        flows = lagoon_flow(option, head, config)
        power = lagoon_power(option, head, config)
        z = step_level(z, flows.total, config.surface_area_m2, config.dt_s)
        chosen.append(option)
        heads.append(head)
        parts.append(flows)
        powers.append(power)
        levels.append(z)
    energy = np.array([energy_mwh(p, config.dt_s) for p in powers])
    price = prices.prices if prices is not None else np.zeros(len(modes))
    schedule = Schedule(
        modes=tuple(chosen),
        z_out_m=np.array(zout),
        z_in_m=np.array(levels),
        head_m=np.array(heads),
        q_total_m3s=np.array([f.total for f in parts]),
        q_sluice_m3s=np.array([f.sluice for f in parts]),
        q_turbine_fill_m3s=np.array([f.turbine_fill for f in parts]),
        q_turbine_gen_m3s=np.array([f.turbine_gen for f in parts]),
        power_mw=np.array(powers),
        energy_mwh=energy,
        revenue=np.asarray(price, dtype=float) * energy,
        dt_s=config.dt_s,
        surface_area_m2=config.surface_area_m2,
    )
    return schedule, repaired


def _finish(config, tide, prices, objective, actions, grid_value, stats) -> SolverResult:
    modes = [action_set(config)[a] for a in actions]
    schedule, repaired = replay_modes(config, tide, modes, prices)
    stats.update(grid_objective=float(grid_value), repaired_steps=repaired)
    value = evaluate_objective(schedule, prices, objective)
    return SolverResult(schedule=schedule, objective=objective, objective_value=value,
                        solver_stats=stats)


def _prepare(config, tide, prices, objective, params):
    validate_config(config)
    check_pairing(config, tide, prices)
    objective = Objective(objective)
    weights = objective_weights(objective, prices, tide.n_steps)
    params = params or DpParams()
    if params.level_range_m is not None:
        lo = float(np.min(tide.levels_m)) + config.h_lo
        hi = float(np.max(tide.levels_m)) + config.h_hi
        if params.level_range_m[0] > lo or params.level_range_m[1] < hi:
            raise ValueError(f"level range must span [{lo}, {hi}]")
    return objective, build_problem(config, tide, weights, params), params


def optimize(config: LagoonConfig, tide: TideSeries, prices: PriceSeries | None = None,
             objective: Objective = Objective.MAX_ENERGY, params: DpParams | None = None,
             backend: str | None = None) -> SolverResult:
    """Optimal schedule on the level grid by backward induction.

    Among equal-valued actions the first in ``action_set`` order wins, so the
    result is the lexicographically first optimal mode sequence.
    """
    started = time.perf_counter()
    objective, problem, params = _prepare(config, tide, prices, objective, params)
    kern = kernels.get_backend(backend)
    values, policy, n_transitions = kern.dp_backward(problem)
    grid_value = values[0, problem.j0]
    if grid_value == -math.inf:
        raise _no_solution(config, tide)
    actions, j = [], problem.j0
    for t in range(problem.n_steps):
        a = int(policy[t, j])
        nxt = kern.step(problem, problem.grid_level(j), t, a)
        actions.append(a)
        j = kern.grid_index(problem, nxt[0])
    stats = {
        "method": "dp",
        "backend": kernels.backend_name(kern),
        "level_resolution_m": params.level_resolution_m,
        "n_states": problem.n_states,
        "n_actions": problem.n_actions,
        "states_expanded": problem.n_states * problem.n_steps,
        "transitions": n_transitions,
    }
    result = _finish(config, tide, prices, objective, actions, grid_value, stats)
    stats["wall_time_s"] = time.perf_counter() - started
    return result


def evaluate_on_grid(config: LagoonConfig, tide: TideSeries, modes, prices: PriceSeries | None = None,
                     objective: Objective = Objective.MAX_ENERGY, params: DpParams | None = None) -> float:
    """Objective of ``modes`` replayed on the DP level grid, rounding as the search does.

    This is the value the DP compares when it ranks sequences; raises
    InfeasibleError if the sequence leaves the grid's feasible set.
    """
    objective, problem, _ = _prepare(config, tide, prices, objective, params)
    modes = list(modes)
    if len(modes) != problem.n_steps:
        raise ValueError(f"{len(modes)} modes for a horizon of {problem.n_steps} steps")
    rewards, j = [], problem.j0
    for t, mode in enumerate(modes):
        nxt = _py_step(problem, problem.grid_level(j), t, action_code(mode))
        if nxt is None:
            raise InfeasibleError(f"{mode} is infeasible on the grid at step {t}", step=t)
        rewards.append(problem.weights[t] * nxt[1])
        j = _py_grid_index(problem, nxt[0])
        if not 0 <= j < problem.n_states:
            raise InfeasibleError(f"{mode} leaves the level grid at step {t}", step=t)
    # summed back to front, like the backward induction
    total = 0.0
    for r in reversed(rewards):
        total = r + total
    return total


def enumerate_exhaustive(config: LagoonConfig, tide: TideSeries, prices: PriceSeries | None = None,
                         objective: Objective = Objective.MAX_ENERGY,
                         params: DpParams | None = None, backend: str | None = None) -> SolverResult:
    """Brute-force optimum over every mode sequence, using the DP's grid rounding.

    Only meant as a test oracle; refuses instances with more than
    ``ENUMERATION_LIMIT`` sequences.
    """
    started = time.perf_counter()
    size = (config.n_turbines + 2) ** tide.n_steps
    if size > ENUMERATION_LIMIT:
        raise ValueError(f"instance too large to enumerate: {size} sequences")
    objective, problem, params = _prepare(config, tide, prices, objective, params)
    kern = kernels.get_backend(backend)
    best, actions, leaves = kern.enumerate_best(problem, problem.j0)
    if actions is None:
        raise _no_solution(config, tide)
    stats = {
        "method": "enumeration",
        "backend": kernels.backend_name(kern),
        "level_resolution_m": params.level_resolution_m,
        "sequences_evaluated": leaves,
    }
    result = _finish(config, tide, prices, objective, actions, best, stats)
    stats["wall_time_s"] = time.perf_counter() - started
    return result
