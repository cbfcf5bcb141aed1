import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from swtorus.lattice import Grid2, Grid4, KahlerData

settings.register_profile(
    "swtorus", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("swtorus")

# filled by tests/test_acceptance.py, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid4():
    return Grid4((4, 5, 4, 6), (1.0, 1.3, 0.9, 1.1))


@pytest.fixture
def grid2():
    return Grid2((6, 5), (1.0, 1.2))


@pytest.fixture
def harmonic_kahler():
    def make(grid):
        x0, x1 = grid.factor1().coords()
        x2, x3 = grid.factor2().coords()
        f1 = 1.0 + 0.3 * np.sin(2 * np.pi * x0 / grid.lengths[0])
        f2 = 1.0 + 0.2 * np.cos(2 * np.pi * x3 / grid.lengths[3])
        return KahlerData(f1, f2)
    return make
