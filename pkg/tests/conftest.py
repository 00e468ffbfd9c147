import numpy as np
import pytest
from hypothesis import settings

from wbmo.grid import DyadicGrid, GridFunction

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def unit():
    """[0, 1) at depth 1: two cells."""
    return DyadicGrid.interval(0.0, 1.0, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def step(grid, values):
    return GridFunction(grid, np.asarray(values, dtype=float).reshape(grid.shape))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
