import math

import pytest
from scipy.optimize import brentq

from thermocount.potential import constant, letter_potential
from thermocount.shift_core import full_shift, matrix_shift, no_aa_shift, truncate_finite

SQRT2 = math.sqrt(2.0)


def bowen_root_two_letters(x: float, y: float) -> float:
    """Independent root of e^{-x d} + e^{-y d} = 1."""
    return brentq(lambda d: math.exp(-x * d) + math.exp(-y * d) - 1.0, 1e-6, 50.0, xtol=1e-15, rtol=1e-15)


@pytest.fixture
def full2():
    return truncate_finite(full_shift("ab"))


@pytest.fixture
def no_aa():
    return truncate_finite(no_aa_shift())


@pytest.fixture
def cycle2():
    return truncate_finite(matrix_shift("ab", [[0, 1], [1, 0]]))


@pytest.fixture
def f_irr():
    return letter_potential({"a": 1.0, "b": SQRT2}, "f")


@pytest.fixture
def g_irr():
    return letter_potential({"a": SQRT2, "b": 1.0}, "g")


@pytest.fixture
def one():
    return constant(1.0)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
