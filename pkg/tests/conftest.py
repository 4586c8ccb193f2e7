import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from etkfsim.scenario import paper_scenario, run_scenario  # noqa: E402


@pytest.fixture(scope="session")
def paper_trace():
    return run_scenario(paper_scenario(delayed=False))


@pytest.fixture(scope="session")
def paper_trace_delayed():
    return run_scenario(paper_scenario(delayed=True))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
