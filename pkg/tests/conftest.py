import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lagoonopt import swansea_config
from lagoonopt.core import PriceSeries, TideSeries
from lagoonopt.io import synth_tide

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def swansea():
    return swansea_config()


@pytest.fixture(scope="session")
def m2_tide():
    return synth_tide(0.0, 4.0, 44_700.0, 0.0, steps=48)


def flat_tide(level, steps, dt_s=1800.0):
    return TideSeries("0", dt_s, np.full(steps + 1, float(level)))


def prices_like(tide, values):
    return PriceSeries(tide.t0, tide.dt_s, np.asarray(values, dtype=float))


# Filled by test_acceptance.py, echoed after the run so the verdicts are visible
# whether or not output capture is on.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
