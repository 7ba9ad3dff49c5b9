import numpy as np
import pytest

from olslab.core import SparseSignal
from olslab.experiment import random_unit_column_matrix

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion; printed at session end."""

    def _report(name: str, passed: bool, detail: str = ""):
        line = f"[{'PASS' if passed else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_instance(rng, m, n, K):
    """Gaussian unit-column matrix plus a K-sparse Gaussian signal."""
    A = random_unit_column_matrix(rng, m, n)
    support = rng.choice(n, size=K, replace=False)
    values = np.zeros(n)
    values[support] = rng.standard_normal(K)
    return A, SparseSignal(values)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Gaussian shapes where rejection sampling for small delta_{K+1} is cheap
CERTIFIABLE_SHAPES = {1: (24, 10), 2: (48, 8), 3: (64, 8)}


def certified_matrices(rng, K, count, accept):
    """Draw unit-column Gaussian matrices until ``count`` satisfy ``accept(delta_{K+1})``."""
    from olslab.rip import exact_rip_constant

    m, n = CERTIFIABLE_SHAPES[K]
    out = []
    while len(out) < count:
        A = random_unit_column_matrix(rng, m, n)
        d = exact_rip_constant(A, K + 1).delta
        if accept(d):
            out.append((A, d))
    return out


def random_signal(rng, n, K):
    support = rng.choice(n, size=K, replace=False)
    values = np.zeros(n)
    values[support] = rng.standard_normal(K)
    return SparseSignal(values)
