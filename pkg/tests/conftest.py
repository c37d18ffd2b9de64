import math

import pytest

from imperfect_bose.free_gas import DensityOfStates, ThermoParams


@pytest.fixture
def unit_params():
    """beta = 1, m = 2 pi (thermal wavelength 1), a = 1, d = 3, mu0 = 0."""
    return ThermoParams(beta=1.0, mass=2.0 * math.pi, coupling_a=1.0, dim=3, mu0=0.0)


@pytest.fixture
def kinetic_dos(unit_params):
    return DensityOfStates.kinetic(unit_params)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Collect one summary line per acceptance criterion."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
