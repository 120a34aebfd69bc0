import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import flat_tide
from lagoonopt import Mode, optimize, swansea_config
from lagoonopt.core import TideSeries
from lagoonopt.dp import replay_modes
from lagoonopt.io import synth_tide
from lagoonopt.physics import turbine_power
from lagoonopt.sim import SimulationError, compare, simulate


def test_all_hold_keeps_level(swansea):
    tide = synth_tide(0.3, 0.8, 44_700, 0.0, steps=24)
    sim = simulate(swansea, tide, [Mode.hold()] * 24)
    assert np.all(sim.z_in_m == 0.3)
    assert np.all(sim.energy_mwh == 0.0)


@given(st.floats(-2.0, 2.0).filter(lambda h: abs(h) > 1e-3))
def test_fill_head_decays_monotonically(head):
    config = swansea_config()
    sea = -head
    tide = TideSeries("0", 1800.0, [0.0, sea, sea, sea])
    # first step holds while the sea jumps, then the gates open against a still sea
    sim = simulate(config, tide, [Mode.hold(), Mode.fill(), Mode.fill()], substep_s=10.0)
    z = sim.z_sub_m[180:]
    h = z - sea
    assert np.all(np.diff(np.abs(h)) <= 1e-12)
    assert np.all(np.sign(h) * np.sign(head) >= 0)
    assert abs(h[-1]) < abs(head)


def test_full_fleet_step_bracketed(swansea):
    tide = TideSeries("0", 1800.0, [0.0, -7.0, -7.0])
    sim = simulate(swansea, tide, [Mode.hold(), Mode.generate(16)], substep_s=60.0)
    e = sim.energy_mwh[1]
    end_head = sim.z_in_m[2] + 7.0
    assert e <= 160.0
    assert e >= 16 * turbine_power(end_head) * 0.5


def test_volume_conserved_each_substep(swansea, m2_tide):
    res = optimize(swansea, m2_tide)
    sim = simulate(swansea, m2_tide, res.schedule.modes, 60.0)
    lhs = swansea.surface_area_m2 * -np.diff(sim.z_sub_m)
    rhs = sim.q_sub_m3s * 60.0
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-6)


def test_substep_must_divide_step(swansea):
    with pytest.raises(ValueError, match="does not divide"):
        simulate(swansea, flat_tide(0.0, 1), [Mode.hold()], 7.0)


def test_head_leaving_bounds(swansea):
    tide = TideSeries("0", 1800.0, [0.0, 2.5])
    with pytest.raises(SimulationError):
        simulate(swansea, tide, [Mode.hold()])


def test_compare_hold_is_zero(swansea):
    tide = synth_tide(0.0, 0.5, 44_700, 1.0, steps=6)
    modes = [Mode.hold()] * 6
    schedule, _ = replay_modes(swansea, tide, modes)
    report = compare(schedule, simulate(swansea, tide, modes))
    stats = report.stats()
    assert all(v == 0.0 for group in stats.values() for v in group.values())
    assert report.relative_energy_gap == 0.0


def test_compare_identity(swansea, m2_tide):
    res = optimize(swansea, m2_tide)
    sim = simulate(swansea, m2_tide, res.schedule.modes)
    report = compare(res.schedule, res.schedule)
    assert report.stats()["energy_mwh"]["max"] == 0.0
    assert compare(res.schedule, sim).total_energy_sim == pytest.approx(sim.energy_mwh.sum())


def test_compare_dimension_mismatch(swansea):
    tide = flat_tide(0.0, 3)
    schedule, _ = replay_modes(swansea, tide, [Mode.hold()] * 3)
    sim = simulate(swansea, flat_tide(0.0, 2), [Mode.hold()] * 2)
    with pytest.raises(ValueError):
        compare(schedule, sim)


def test_reference_deviation_stored(swansea, m2_tide):
    res = optimize(swansea, m2_tide)
    sim = simulate(swansea, m2_tide, res.schedule.modes, reference=res.schedule)
    assert np.array_equal(sim.energy_deviation_mwh, sim.energy_mwh - res.schedule.energy_mwh)
