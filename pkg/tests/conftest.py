import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pvss import sim
from pvss.group import TOY_PARAMS


@pytest.fixture
def toy():
    return TOY_PARAMS


@pytest.fixture
def fx():
    """p=23, q=11, g=2; F(x) = 7 + 3x; private keys (4, 7, 2)."""
    return sim.toy_fixture()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
