import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lagoonopt import Mode, swansea_config
from lagoonopt.physics import (
    FlowLaw,
    PiecewiseLinear,
    energy_mwh,
    fit_linear_coefficient,
    gen_flow_curve,
    lagoon_flow,
    lagoon_power,
    linear_fill_flow,
    orifice_flow,
    power_curve,
    step_level,
    turbine_gen_flow,
    turbine_power,
)

heads = st.floats(-20, 20, allow_nan=False)
hill_heads = st.floats(0.0, 8.0, allow_nan=False)


def grid_search_k(h_lo, h_hi, coeff=1.0, g=9.81, n=1000, step=1e-4):
    """Brute-force least-squares k over a 1e-4 grid, independent of the closed form."""
    h = np.linspace(h_lo, h_hi, n)
    target = coeff * np.sqrt(2 * g * h)
    ks = np.arange(0.0, 10.0, step)
    residual = ((target[None, :] - ks[:, None] * h[None, :]) ** 2).sum(axis=1)
    return ks[np.argmin(residual)]


class TestOrifice:
    def test_unit_head_800m2(self):
        assert orifice_flow(1.0, 1.0, 800.0, 9.81) == pytest.approx(3543.6, abs=0.1)

    def test_zero_head(self):
        assert orifice_flow(0.0, 0.7, 123.0) == 0.0

    def test_negative_head_is_inflow(self):
        assert orifice_flow(-1.0, 1.0, 800.0) == pytest.approx(-3543.6, abs=0.1)

    @given(heads, st.floats(0.1, 1.5), st.floats(1.0, 1000.0))
    def test_odd(self, h, c, a):
        assert orifice_flow(-h, c, a) == -orifice_flow(h, c, a)


class TestLinearFill:
    def test_zero_head(self):
        assert linear_fill_flow(0.0, 4.2, 800.0) == 0.0

    def test_linear_in_head(self):
        assert linear_fill_flow(2.0, 4.2, 800.0) == 2 * linear_fill_flow(1.0, 4.2, 800.0)

    def test_fitted_close_to_orifice(self):
        k = fit_linear_coefficient(0.5, 7.0)
        assert linear_fill_flow(3.5, k, 800.0) == pytest.approx(orifice_flow(3.5, 1.0, 800.0), rel=0.2)


class TestFit:
    def test_single_sample_is_exact_ratio(self):
        assert fit_linear_coefficient(1.0, 1.0 + 1e-9, n_samples=1) == pytest.approx(math.sqrt(19.62))

    def test_matches_grid_search(self):
        k = fit_linear_coefficient(0.5, 7.0, 1.0, 9.81, 1000)
        assert k == pytest.approx(grid_search_k(0.5, 7.0), rel=1e-3)

    def test_default_config_uses_fit(self):
        assert swansea_config().k_sluice == fit_linear_coefficient(0.5, 7.0)

    def test_doubling_coefficient_doubles_k(self):
        assert fit_linear_coefficient(0.5, 7.0, 2.0) == pytest.approx(2 * fit_linear_coefficient(0.5, 7.0, 1.0),
                                                                        rel=1e-15)

    @pytest.mark.parametrize("lo,hi", [(2.0, 2.0), (3.0, 1.0)])
    def test_degenerate_range(self, lo, hi):
        with pytest.raises(ValueError):
            fit_linear_coefficient(lo, hi)


class TestHillChart:
    @pytest.mark.parametrize("h,expected", [(0.5, 0.0), (2.0, 248.19), (5.0, 411.65), (8.0, 384.55)])
    def test_flow_branches(self, h, expected):
        assert turbine_gen_flow(h) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("h,expected", [(1.0, 0.0), (4.0, 9.99), (7.0, 20.0)])
    def test_power_branches(self, h, expected):
        assert turbine_power(h) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("h", [-0.01, 8.01])
    def test_outside_domain(self, h):
        with pytest.raises(ValueError):
            turbine_gen_flow(h)
        with pytest.raises(ValueError):
            turbine_power(h)

    def test_boundaries_take_later_branch(self):
        assert turbine_gen_flow(3.9) == pytest.approx(337.60 + 14.81 * 3.9)
        assert turbine_gen_flow(7.0) == pytest.approx(807.19 - 52.83 * 7.0)
        assert turbine_gen_flow(1.0) == pytest.approx(92.99 + 77.60)

    def test_flow_junction_gaps_as_printed(self):
        # The printed coefficients do not meet exactly at the breakpoints.
        left = 92.99 + 77.60 * 3.9
        assert abs(turbine_gen_flow(3.9) - left) == pytest.approx(0.271, abs=1e-9)
        left = 337.60 + 14.81 * 7.0
        assert left - turbine_gen_flow(7.0) == pytest.approx(3.89, abs=1e-9)

    def test_power_junction_at_seven(self):
        below = turbine_power(np.nextafter(7.0, 0.0))
        # -3.33 + 3.33 * 7 = 19.98, a 0.02 MW step up to the 20 MW cap
        assert below == pytest.approx(19.98, abs=1e-9)
        assert turbine_power(7.0) - below < 0.025

    def test_power_monotone_and_bounded_on_fine_grid(self):
        values = np.array([turbine_power(h) for h in np.linspace(0.0, 8.0, 8001)])
        assert np.all(np.diff(values) >= 0.0)
        assert values.min() >= 0.0 and values.max() <= 20.0

    @given(hill_heads)
    def test_flow_nonnegative_and_gated(self, h):
        q = turbine_gen_flow(h)
        assert q >= 0.0
        if h < 1.0:
            assert q == 0.0 and turbine_power(h) == 0.0

    def test_curves_follow_h_min(self):
        assert gen_flow_curve(2.0)(1.5) == 0.0
        assert power_curve(2.0).breakpoints[1] == 2.0


class TestPiecewise:
    def test_left_closed_intervals(self):
        f = PiecewiseLinear((0.0, 1.0, 2.0), ((0.0, 1.0), (10.0, 0.0)))
        assert f(1.0) == 10.0
        assert f(2.0) == 10.0
        assert f.segment_index(0.999) == 0

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            PiecewiseLinear((0.0, 1.0), ((0.0, 1.0), (1.0, 1.0)))
        with pytest.raises(ValueError):
            PiecewiseLinear((1.0, 0.0), ((0.0, 1.0),))


class TestLagoonFlow:
    def test_hold_is_zero(self, swansea):
        assert tuple(lagoon_flow(Mode.hold(), 3.0, swansea)) == (0.0, 0.0, 0.0, 0.0)

    def test_fill_with_illustrative_k(self):
        cfg = swansea_config(k_sluice=4.0, k_turbine=4.0)
        flows = lagoon_flow(Mode.fill(), -2.0, cfg)
        assert flows.sluice == -6400.0
        assert flows.turbine_fill == 16 * 4.0 * 42.0 * -2.0
        assert flows.total == flows.sluice + flows.turbine_fill

    def test_fill_nonlinear_uses_orifice(self, swansea):
        flows = lagoon_flow(Mode.fill(), -1.0, swansea, FlowLaw.NONLINEAR)
        assert flows.sluice == pytest.approx(-3543.6, abs=0.1)

    def test_full_fleet_at_seven(self, swansea):
        flows = lagoon_flow(Mode.generate(16), 7.0, swansea)
        assert flows.total == pytest.approx(16 * 437.38)
        assert lagoon_power(Mode.generate(16), 7.0, swansea) == 320.0

    def test_generate_below_zero_head_is_idle(self, swansea):
        assert lagoon_power(Mode.generate(3), -0.5, swansea) == 0.0


class TestStepLevel:
    def test_no_flow(self):
        assert step_level(1.25, 0.0, 11.5e6, 1800.0) == 1.25

    def test_outflow_drop(self):
        assert step_level(2.0, 3543.6, 11.5e6, 1800.0) == pytest.approx(1.4454, abs=1e-4)

    @given(st.floats(-5000, -1e-3))
    def test_inflow_raises(self, q):
        assert step_level(0.0, q, 11.5e6, 1800.0) > 0.0

    @given(st.floats(-5, 5), st.floats(-8000, 8000), st.floats(1e5, 1e8))
    def test_volume_conserved(self, z, q, a):
        zn = step_level(z, q, a, 1800.0)
        assert a * (z - zn) == pytest.approx(q * 1800.0, rel=1e-9, abs=1e-6 * a)

    def test_energy_conversion(self):
        assert energy_mwh(320.0, 1800.0) == 160.0
