import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hallmhd import GridSpec  # noqa: E402
from hallmhd.ensemble import random_divfree, random_state  # noqa: E402


@pytest.fixture(scope="session")
def grid8():
    return GridSpec(8)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def rand_field(grid, seed, k_cut=None, alpha=2.0):
    return random_divfree(grid, np.random.default_rng(seed), alpha, k_cut)


def rand_state(grid, seed, k_cut=2, amplitude=1.0):
    return random_state(grid, np.random.default_rng(seed), k_cut=k_cut, amplitude=amplitude)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    return pytestconfig.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
