import numpy as np
import pytest

from fidbound.states import DensityMatrix, EnsembleSpec, sample_pair

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture
def diag_pair():
    return DensityMatrix.diagonal([0.75, 0.25]), DensityMatrix.diagonal([0.5, 0.5])


@pytest.fixture
def ket0():
    return DensityMatrix.pure([1, 0])


@pytest.fixture
def ket1():
    return DensityMatrix.pure([0, 1])


@pytest.fixture
def ket_plus():
    return DensityMatrix.pure([1, 1])


def random_pairs(kind, dim, n, seed=1234, rank=None):
    spec = EnsembleSpec(kind, dim, seed, rank)
    return [sample_pair(spec, t) for t in range(n)]


def random_hermitian(rng, d, scale=1.0):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (g + g.conj().T) / 2


def random_psd(rng, d, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return m / np.max(np.linalg.eigvalsh(m))
