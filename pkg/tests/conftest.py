import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from lpcollapse.config import SolverConfig  # noqa: E402
from lpcollapse.shooting import solve_lp  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cfg():
    return SolverConfig()


@pytest.fixture(scope="session")
def lp_solution(cfg):
    return solve_lp(cfg)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
