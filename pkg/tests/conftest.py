import warnings

import numpy as np
import pytest

from besovfill import build_filling, generate_space


def quiet_filling(space, n_min, n_max):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_filling(space, n_min, n_max)


@pytest.fixture(scope="session")
def grid512():
    space = generate_space("grid1d", 512)
    return space, quiet_filling(space, 0, 9)


@pytest.fixture(scope="session")
def grid64():
    space = generate_space("grid1d", 64)
    return space, quiet_filling(space, 0, 6)


@pytest.fixture(scope="session")
def circle128():
    space = generate_space("circle", 128)
    return space, quiet_filling(space, 0, 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record(name, ok, detail):
    """Register one acceptance line; shown in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
