import numpy as np
import pytest

from hhverify import HermitianMatrix, Interval, random_hermitian_in

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, ok, detail):
        lines.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def random_matrix(n, rng, lo=-3.0, hi=3.0):
    return random_hermitian_in(Interval.closed(lo, hi), n, rng)


def scalar(c, n=1):
    return HermitianMatrix.scalar(c, n)
