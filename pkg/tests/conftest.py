import math

import numpy as np
import pytest

from cqedgate.design import solve_design

TWO_PI = 2 * math.pi
MHZ = TWO_PI * 1e6
GHZ = TWO_PI * 1e9


@pytest.fixture(scope="session")
def flagship_design():
    return solve_design(5.0 * GHZ, 7.5 * GHZ, 150 * MHZ, 1.5 * GHZ, [10 * MHZ, 30 * MHZ], m=2)


@pytest.fixture(scope="session")
def flagship_params(flagship_design):
    return flagship_design.system_params(crosstalk_fraction=0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
