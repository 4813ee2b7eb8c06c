import numpy as np
import pytest

from swirlreg.core import DriftProfile, Grid1D, InitialData1D, TimeGrid
from swirlreg.drift1d import HalfLineProblem, solve_halfline

# filled by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def type_i():
    return DriftProfile.type_i(1.0, 1.0)


@pytest.fixture(scope="session")
def coarse_u(type_i):
    """Unit-slope solution under TypeI(1, 1) at a cheap resolution, to T - 1e-4."""
    grid = Grid1D.uniform(20.0, 1 / 128)
    times = TimeGrid.graded(1.0, theta=1 / 32, dt_max=1 / 128)
    return solve_halfline(HalfLineProblem(type_i, InitialData1D.linear(), grid, times))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
