import numpy as np
import pytest

from gelfand_lab.continuation import find_fold
from gelfand_lab.grid import build_radial_grid
from gelfand_lab.solver import gelfand

_FOLDS = {}


@pytest.fixture(scope="session")
def nl():
    return gelfand()


@pytest.fixture(scope="session")
def fold_at():
    """Cached fold points keyed by (dim, n, t)."""
    def get(dim, n, t=1.0):
        key = (dim, n, float(t))
        if key not in _FOLDS:
            _FOLDS[key] = find_fold(build_radial_grid(dim, n), gelfand(), t)
        return _FOLDS[key]
    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record the one-line verdict of an acceptance criterion."""
    def record(number, passed, summary):
        line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} - {summary}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
