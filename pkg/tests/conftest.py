import pytest

from baitmenu.core import FiniteDistribution, Mechanism

# two-point prior of the worked example: value 10 w.p. 0.9, value 100 w.p. 0.1
EXAMPLE_F = FiniteDistribution((10.0, 100.0), (0.9, 0.1))

UNIFORM_MENU = Mechanism.from_prices(2, 1.0, [[9, 9], [98.9, 98.9]])
# bait 10 - t next to an expensive item at 98.9 - t on page t = 1..10
STAIRCASE_MENU = Mechanism.from_prices(2, 1.0, [[10 - t, round(98.9 - t, 9)] for t in range(1, 11)])


@pytest.fixture
def f_example():
    return EXAMPLE_F


@pytest.fixture
def uniform_menu():
    return UNIFORM_MENU


@pytest.fixture
def staircase_menu():
    return STAIRCASE_MENU


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
