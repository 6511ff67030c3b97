import numpy as np
import pytest

from ldm.banded import BandedSymMatrix


def random_banded(rng, n, w, scale=1.0):
    return BandedSymMatrix(scale * rng.standard_normal((w + 1, n)))


def random_sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def gapped_hamiltonian(rng, n, N, gap=1.0):
    """Random symmetric matrix with a gap of at least ``gap`` after the N-th eigenvalue."""
    Qm, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.sort(rng.uniform(-1.0, 1.0, n))
    lam[N:] += gap
    return (Qm * lam) @ Qm.T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[num])
