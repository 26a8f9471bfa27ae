import numpy as np
import pytest


def random_density(dim, rng, rank=None):
    """Random full-rank (or given rank) density matrix."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return g + g.conj().T


def local_maxima(y):
    """Indices of strict interior maxima plus rising/falling endpoints."""
    y = np.asarray(y, dtype=float)
    out = []
    for i in range(len(y)):
        left = i == 0 or y[i] > y[i - 1]
        right = i == len(y) - 1 or y[i] > y[i + 1]
        if left and right:
            out.append(i)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = []


def report_criterion(number, passed, detail):
    """Record and print one acceptance line; the caller asserts ``passed``."""
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
