import numpy as np
import pytest

from epespec.pauli import PauliString, PauliSum


def random_pauli_sum(rng, n_qubits, n_terms, hermitian=True):
    letters = rng.choice(list("IXYZ"), size=(n_terms, n_qubits))
    terms = []
    for row in letters:
        c = rng.normal()
        if not hermitian:
            c = c + 1j * rng.normal()
        terms.append((c, PauliString("".join(row))))
    return PauliSum(n_qubits, terms)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


# Filled by the acceptance tests, echoed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
