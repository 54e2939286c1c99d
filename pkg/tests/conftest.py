import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chronoslit.config import parse_config  # noqa: E402
from chronoslit.grids import make_grid  # noqa: E402


@pytest.fixture
def unit_grid():
    return make_grid(0.0, 1.0, 64, periodic=True)


@pytest.fixture(scope="session")
def photon():
    return parse_config("photon_tuned.cfg").experiment


@pytest.fixture(scope="session")
def electron():
    return parse_config("electron_tuned.cfg").experiment


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_results", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
