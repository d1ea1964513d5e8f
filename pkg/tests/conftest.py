import numpy as np
import pytest

from wonc.spectral import TracialMatrix

PHIS = ["pow:1.5", "pow:2", "pow:4", "plog:2,1", "plog:3,1"]


def ginibre(rng, n):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)


def svd_oracle(a):
    """Singular values from LAPACK, independent of the Jacobi kernel."""
    return np.sort(np.linalg.svd(np.asarray(a), compute_uv=False))[::-1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def diag321():
    return TracialMatrix(np.diag([3.0, 2.0, 1.0]))


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``; returns ``ok``."""
    def record(n, ok, detail):
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {detail}")
