import sys

import pytest

import nets


@pytest.fixture
def cycle3():
    return nets.three_cycle()


@pytest.fixture
def two_tier():
    return nets.two_tier()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
