import pytest

from doubledot import DoubleDotSpec

V_C = 0.9013344775740003
E_C = 0.9847319278346617

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fig1_spec():
    """One level per dot at 1, wire 2 - L/5 at L = 3 (level 1.4), u = 1/4."""
    return DoubleDotSpec((1.0,), (1.0,), 2.0, -0.2, 3.0, 0.25, 0.5)


@pytest.fixture
def fig3_spec():
    return DoubleDotSpec((0.0,), (0.0,), 2.0, -0.2, 10.0, 0.25, 0.5)


@pytest.fixture
def two_level_spec():
    return DoubleDotSpec((0.5, 1.0), (0.5, 1.0), 2.0, -0.25, 2.0, 0.25, 0.5)


@pytest.fixture
def five_level_spec():
    lv = (0.25, 1 / 3, 0.5, 0.75, 1.0)
    return DoubleDotSpec(lv, lv, 1.0, -0.125, 1.5, 0.2, 0.5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
