"""Exit criteria of the build, each at its stated tolerance.

Every test prints one ``criterion N PASS|FAIL`` line; the lines are also
collected into a summary section at the end of the run.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from helpers import implied_interval, level_schedule, tiny_instance
from lagoonopt import (
    DpParams,
    InfeasibleError,
    Objective,
    PriceSeries,
    enumerate_exhaustive,
    optimize,
    swansea_config,
)
from lagoonopt.cli import main
from lagoonopt.io import load_schedule_document, read_table_csv, schedule_columns, synth_tide
from lagoonopt.milp import build_milp, check_schedule, schedule_assignment
from lagoonopt.physics import turbine_gen_flow, turbine_power
from lagoonopt.sim import compare, simulate
from lagoonopt.storage import storage_profile, summarize

pytestmark = pytest.mark.acceptance

M2 = 44_700.0


def verdict(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} -- {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def config():
    return swansea_config()


@pytest.fixture(scope="module")
def tide():
    return synth_tide(0.0, 4.0, M2, 0.0, steps=48)


def test_criterion_1_hill_chart(config):
    started = time.perf_counter()
    heads = (0.5, 1.0, 2.0, 3.9, 5.0, 7.0, 8.0)
    flow_branches = ((0.0, 0.0), (92.99, 77.60), (337.60, 14.81), (807.19, -52.83))
    power_branches = ((0.0, 0.0), (-3.33, 3.33), (-3.33, 3.33), (20.0, 0.0))

    def branch(h):
        return 0 if h < 1.0 else 1 if h < 3.9 else 2 if h < 7.0 else 3

    mismatches = []
    for h in heads:
        a, b = flow_branches[branch(h)]
        if turbine_gen_flow(h) != a + b * h:
            mismatches.append(f"flow@{h}")
        a, b = power_branches[branch(h)]
        if turbine_power(h) != a + b * h:
            mismatches.append(f"power@{h}")
    quoted = {("flow", 0.5): 0.0, ("flow", 2.0): 248.19, ("flow", 5.0): 411.65, ("flow", 8.0): 384.55,
              ("power", 0.5): 0.0, ("power", 4.0): 9.99, ("power", 8.0): 20.0}
    for (kind, h), value in quoted.items():
        got = turbine_gen_flow(h) if kind == "flow" else turbine_power(h)
        if abs(got - value) > 1e-9:
            mismatches.append(f"{kind}@{h}={got}")
    elapsed = time.perf_counter() - started
    verdict(1, "hill-chart fidelity", not mismatches and elapsed < 0.5,
            f"mismatches={mismatches or 'none'}, {elapsed * 1e3:.2f} ms")


def test_criterion_2_oracle_equivalence():
    started = time.perf_counter()
    params = DpParams(level_resolution_m=0.05)
    unequal, feasible = [], 0
    for seed in range(20):
        cfg, tide, prices, objective = tiny_instance(seed)
        try:
            oracle = enumerate_exhaustive(cfg, tide, prices, objective, params)
        except InfeasibleError:
            try:
                optimize(cfg, tide, prices, objective, params)
                unequal.append(seed)
            except InfeasibleError:
                pass
            continue
        feasible += 1
        dp = optimize(cfg, tide, prices, objective, params)
        if (dp.solver_stats["grid_objective"] != oracle.solver_stats["grid_objective"]
                or dp.objective_value != oracle.objective_value):
            unequal.append(seed)
    elapsed = time.perf_counter() - started
    verdict(2, "DP equals exhaustive enumeration", not unequal and elapsed < 10,
            f"20 instances ({feasible} feasible), mismatches={unequal or 'none'}, {elapsed:.2f} s")


def test_criterion_3_dominance(config, tide):
    started = time.perf_counter()
    energy_run = optimize(config, tide)
    generating = [t for t, m in enumerate(energy_run.schedule.modes) if m.is_generate]
    # price peak at step 32, between the two generation windows of the energy run
    peak = 32
    prices = PriceSeries(tide.t0, tide.dt_s, 50 + 25 * np.cos(2 * np.pi * (np.arange(48) - peak) / 48))
    spread = (prices.prices.max() - prices.prices.min()) / prices.prices.max()
    revenue_run = optimize(config, tide, prices, Objective.MAX_REVENUE)
    e = summarize(energy_run.schedule, prices, config)
    r = summarize(revenue_run.schedule, prices, config)
    elapsed = time.perf_counter() - started
    ok = (spread >= 0.30 and peak not in generating and r.revenue > e.revenue
          and e.energy_mwh >= r.energy_mwh and elapsed < 10)
    verdict(3, "objective dominance", ok,
            f"spread {spread:.0%}; max-energy run {e.energy_mwh:.1f} MWh / {e.revenue:.0f}, "
            f"max-revenue run {r.energy_mwh:.1f} MWh / {r.revenue:.0f}, {elapsed:.2f} s")


def test_criterion_4_constant_price(config, tide):
    started = time.perf_counter()
    c = 50.0
    energy = optimize(config, tide).objective_value
    revenue = optimize(config, tide, PriceSeries.flat(c, 48, t0=tide.t0), Objective.MAX_REVENUE).objective_value
    rel = abs(revenue - c * energy) / abs(c * energy)
    elapsed = time.perf_counter() - started
    verdict(4, "constant-price equivalence", rel <= 1e-9 and elapsed < 10,
            f"revenue {revenue:.6f} vs {c:g} x {energy:.6f}, relative gap {rel:.2e}, {elapsed:.2f} s")


def test_criterion_5_scenario_magnitude(config, tide):
    started = time.perf_counter()
    energy = optimize(config, tide).objective_value
    elapsed = time.perf_counter() - started
    verdict(5, "daily energy magnitude", 250.0 <= energy <= 750.0 and elapsed < 10,
            f"8 m-range M2 tide, phase 0: {energy:.1f} MWh (target [250, 750]), {elapsed:.2f} s")


def test_criterion_6_milp_consistency(config, tide):
    started = time.perf_counter()
    failures = []
    prices = PriceSeries(tide.t0, tide.dt_s, 50 + 25 * np.cos(2 * np.pi * (np.arange(48) - 32) / 48))
    runs = [(config, tide, None, Objective.MAX_ENERGY, None),
            (config, tide, prices, Objective.MAX_REVENUE, None)]
    runs += [(*tiny_instance(s), DpParams(level_resolution_m=0.05)) for s in range(20)]
    checked = 0
    for cfg, tde, prc, objective, params in runs:
        try:
            res = optimize(cfg, tde, prc, Objective(objective), params)
        except InfeasibleError:
            continue
        checked += 1
        if check_schedule(build_milp(cfg, tde, prc, objective), res.schedule, 1e-6):
            failures.append("dp schedule")

    one = swansea_config(n_turbines=1)
    toy = build_milp(one, synth_tide(0.0, 0.0, steps=1))
    worst = 0.0
    for h in np.round(np.arange(0.0, 8.0 + 1e-9, 0.01), 10):
        values = schedule_assignment(toy, level_schedule(one, h))
        for var, tag, ref in (("QG_1_0", "hill-flow", turbine_gen_flow(h)), ("PT_1_0", "hill-power", turbine_power(h))):
            lo, hi = implied_interval(toy, var, {tag}, values)
            worst = max(worst, abs(lo - ref), abs(hi - ref))
    if worst > 1e-6:
        failures.append(f"curve gap {worst:.2e}")

    for var, factor, tag, grid in (("zTG_1_0", "QG_1_0", "gen-product", np.linspace(0, 450, 451)),
                                   ("zF_0", "QF_0", "fill-product",
                                    np.linspace(toy.variable("QF_0").lb, toy.variable("QF_0").ub, 451))):
        delta_name = "dG_1_0" if tag == "gen-product" else "dF_0"
        for q in grid:
            for delta in (0.0, 1.0):
                lo, hi = implied_interval(toy, var, {tag}, {factor: q, delta_name: delta, var: 0.0})
                if abs(lo - delta * q) > 1e-9 or abs(hi - delta * q) > 1e-9:
                    failures.append(f"{tag} at q={q}, delta={delta}")
    elapsed = time.perf_counter() - started
    verdict(6, "MILP consistency", not failures,
            f"{checked} DP schedules feasible at 1e-6, curve gap {worst:.1e} on 801 heads, "
            f"product rows exact; failures={failures[:3] or 'none'}, {elapsed:.2f} s")


def test_criterion_7_linearisation_gap(config, tide):
    started = time.perf_counter()
    res = optimize(config, tide)
    sim60 = simulate(config, tide, res.schedule.modes, 60.0)
    sim30 = simulate(config, tide, res.schedule.modes, 30.0)
    gap = compare(res.schedule, sim60).relative_energy_gap
    e60, e30 = sim60.energy_mwh.sum(), sim30.energy_mwh.sum()
    halving = abs(e30 - e60) / e60
    elapsed = time.perf_counter() - started
    verdict(7, "linearisation gap", gap <= 0.15 and halving < 0.005 and elapsed < 30,
            f"schedule {res.objective_value:.1f} MWh vs replay {e60:.1f} MWh: gap {gap:.2%}; "
            f"60->30 s sub-step changes energy by {halving:.3%}, {elapsed:.2f} s")


def test_criterion_8_storage_profile(config, tide):
    started = time.perf_counter()
    profile = storage_profile(config, tide)
    low = profile.head_m < 1.0
    zero_low = bool(np.all(profile.stored_energy_mwh[low] == 0.0))
    capped = bool(profile.stored_energy_mwh.max() <= 160.0)
    order = np.argsort(profile.head_m, kind="stable")
    monotone = bool(np.all(np.diff(profile.stored_energy_mwh[order]) >= 0.0))
    shifted = storage_profile(config, tide.shifted(2.75))
    invariant = bool(np.allclose(shifted.stored_energy_mwh, profile.stored_energy_mwh, rtol=0, atol=1e-9))
    elapsed = time.perf_counter() - started
    ok = zero_low and capped and monotone and invariant and elapsed < 0.5
    verdict(8, "storage profile", ok,
            f"zero below 1 m: {zero_low}, peak {profile.stored_energy_mwh.max():.1f} MWh <= 160: {capped}, "
            f"monotone: {monotone}, offset-invariant: {invariant}, {elapsed * 1e3:.1f} ms")


def test_criterion_9_determinism_round_trip(tmp_path):
    args = ["optimize", "--synth-tide", "0,4,44700,0", "--prices", "flat:50", "--lp", "--simulate", "--storage"]
    codes = [main(args + ["--out-dir", str(tmp_path / run)]) for run in ("a", "b")]
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    identical = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)

    schedule, cfg, tide, prices, doc = load_schedule_document(tmp_path / "a" / "schedule.json")
    res = optimize(cfg, tide, prices)
    exact = (schedule.modes == res.schedule.modes
             and all(np.array_equal(getattr(schedule, f), getattr(res.schedule, f))
                     for f in ("z_in_m", "head_m", "q_total_m3s", "power_mw", "energy_mwh", "revenue"))
             and json.loads(json.dumps(doc)) == doc)
    table = read_table_csv(tmp_path / "a" / "series.csv")
    worst = 0.0
    for name, column in schedule_columns(schedule, prices).items():
        for text, value in zip(table[name], column):
            if isinstance(value, str):
                worst = max(worst, 0.0 if text == value else math.inf)
            else:
                worst = max(worst, abs(float(text) - value) / max(abs(value), 1e-12) if value else abs(float(text)))
    ok = codes == [0, 0] and identical and exact and worst <= 1e-9
    verdict(9, "determinism and round trip", ok,
            f"{len(names)} files byte-identical: {identical}; schedule document exact: {exact}; "
            f"series CSV worst relative error {worst:.1e}")
