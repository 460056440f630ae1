"""Time-evolution unitaries ``exp[i(H - E0) T]`` for the phase-estimation ladder.

Two evolution descriptors are supported:

``TrotterPlan``
    First- or second-order Trotter-Suzuki product of Pauli rotations.
``ExactEvolution``
    Matrix exponential through a Hermitian eigendecomposition.

Both describe ``W = exp(iHT)`` on the system register. The ``-E0`` offset is
never folded into ``H``; the controlled ladder realizes it as a phase gate on
the control qubit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Union

import numpy as np

from .errors import DimensionError, ResourceError, ValidationError
from .pauli import PauliString, PauliSum
from .statevector import Statevector, _phase_indices, apply_phase_gate, rotate_system

DENSE_QUBIT_CAP = 12

_PAULI_2x2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_matrix(string: PauliString) -> np.ndarray:
    """Dense Pauli matrix by explicit Kronecker products (qubit 0 rightmost)."""
    return reduce(np.kron, [_PAULI_2x2[p] for p in reversed(string.letters)])


def _check_dense(n_qubits: int) -> None:
    if n_qubits > DENSE_QUBIT_CAP:
        raise ResourceError(f"dense matrices limited to {DENSE_QUBIT_CAP} system qubits, got {n_qubits}")


@dataclass(frozen=True)
class TrotterPlan:
    order: int
    dt: float
    n_steps: int
    terms: tuple[tuple[float, PauliString], ...]
    e0: float
    T: float
    n_qubits: int

    @property
    def term_order(self) -> tuple[PauliString, ...]:
        return tuple(s for _, s in self.terms)

    def step_sequence(self) -> list[tuple[float, PauliString]]:
        """Rotation angles and strings of one Trotter step, in application order."""
        if self.order == 1:
            return [(c * self.dt, s) for c, s in self.terms]
        half = [(0.5 * c * self.dt, s) for c, s in self.terms]
        seq = half[:-1] + [(c * self.dt, s) for c, s in self.terms[-1:]] + half[-2::-1]
        return seq

    def describe(self) -> dict:
        return {
            "kind": "trotter",
            "order": self.order,
            "dt": self.dt,
            "n_steps": self.n_steps,
            "T": self.T,
            "e0": self.e0,
            "n_terms": len(self.terms),
        }

    @cached_property
    def _compiled(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        return [(angle, *s.action()) for angle, s in self.step_sequence()]

    def apply_gates(self, block: np.ndarray, repetitions: int) -> None:
        """Run ``repetitions`` full-time Trotter circuits on a system-axis block."""
        compiled = self._compiled
        for _ in range(repetitions * self.n_steps):
            for angle, perm, phase in compiled:
                rotate_system(block, angle, perm, phase)

    @cached_property
    def system_unitary(self) -> np.ndarray:
        """``W`` compiled by pushing the identity columns through the gate sequence."""
        _check_dense(self.n_qubits)
        dim = 1 << self.n_qubits
        block = np.eye(dim, dtype=complex)[None, :, :]
        self.apply_gates(block, 1)
        return block[0]


@dataclass(frozen=True)
class ExactEvolution:
    h: PauliSum
    e0: float
    T: float
    n_qubits: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_qubits", self.h.n_qubits)

    def describe(self) -> dict:
        return {"kind": "exact", "T": self.T, "e0": self.e0}

    @cached_property
    def system_unitary(self) -> np.ndarray:
        _check_dense(self.n_qubits)
        evals, evecs = np.linalg.eigh(self.h.to_matrix())
        return (evecs * np.exp(1j * evals * self.T)) @ evecs.conj().T

    def apply_gates(self, block: np.ndarray, repetitions: int) -> None:
        u = np.linalg.matrix_power(self.system_unitary, repetitions)
        block[...] = np.einsum("st,atk->ask", u, block)


Evolution = Union[TrotterPlan, ExactEvolution]


def make_plan(h: PauliSum, e0: float, T: float, order: int = 1, dt: float | None = None) -> TrotterPlan:
    """Build a Trotter plan for ``exp[i(H - E0)T]``.

    Args:
        h: Hermitian Hamiltonian.
        e0: Energy offset, applied separately as a controlled phase.
        T: Total scaling time.
        order: 1 (sequential) or 2 (symmetric).
        dt: Time step; must divide ``T`` within 1e-9 relative tolerance.

    Terms are applied in descending ``|coeff|``, ties broken by label.
    """
    if order not in (1, 2):
        raise ValidationError(f"Trotter order must be 1 or 2, got {order}")
    if len(h) == 0:
        raise ValidationError("cannot Trotterize an empty Hamiltonian")
    if dt is None:
        dt = T
    if T <= 0 or dt <= 0:
        raise ValidationError("T and dt must be positive")
    if dt > T * (1 + 1e-9):
        raise ValidationError(f"dt={dt} exceeds T={T}")
    ratio = T / dt
    n_steps = int(round(ratio))
    if abs(n_steps - ratio) > 1e-9 * ratio:
        raise ValidationError(f"dt={dt} does not divide T={T} (T/dt = {ratio:.9f})")
    hh = h.hermitian()
    terms = sorted(((c.real, s) for c, s in hh), key=lambda t: (-abs(t[0]), t[1].letters))
    return TrotterPlan(
        order=order,
        dt=T / n_steps,
        n_steps=n_steps,
        terms=tuple(terms),
        e0=float(e0),
        T=float(T),
        n_qubits=h.n_qubits,
    )


def apply_evolution(
    state: Statevector,
    evolution: Evolution,
    power: int = 1,
    controls: tuple[int, ...] = (),
    method: str = "fused",
) -> Statevector:
    """Apply ``W**power`` (no ``E0`` phase) to the system register.

    ``method="gates"`` runs the rotation sequence itself; ``"fused"`` applies
    the compiled system unitary.
    """
    if evolution.n_qubits != state.layout.n_s:
        raise DimensionError("evolution and system register widths differ")
    t = state.tensor()
    idx = _phase_indices(state.layout.n_q, controls)
    block = t if idx is None else t[:, :, idx]
    if method == "gates":
        if idx is None:
            evolution.apply_gates(t, power)
            return state
        evolution.apply_gates(block, power)
    elif method == "fused":
        u = np.linalg.matrix_power(evolution.system_unitary, power)
        block = np.einsum("st,atk->ask", u, block)
        if idx is None:
            t[:, :, :] = block
            return state
    else:
        raise ValidationError(f"unknown application method {method!r}")
    t[:, :, idx] = block
    return state


def apply_controlled_power(
    state: Statevector,
    evolution: Evolution,
    control_qubit: int | None,
    power: int,
    method: str = "fused",
) -> Statevector:
    """Controlled ``U**power`` with ``U = exp[i(H - E0)T]``.

    The ``exp(-i E0 T power)`` factor is a phase gate on the control; without
    a control it is a global phase on the whole state.
    """
    if power < 1:
        raise ValidationError("power must be at least 1")
    phi = -evolution.e0 * evolution.T * power
    if control_qubit is None:
        apply_evolution(state, evolution, power, (), method)
        state.amplitudes *= np.exp(1j * phi)
        return state
    if power > 1 << (state.layout.n_q - 1):
        raise ValidationError(f"power {power} exceeds 2**(n_q-1) for n_q={state.layout.n_q}")
    apply_evolution(state, evolution, power, (control_qubit,), method)
    apply_phase_gate(state, control_qubit, phi)
    return state


def apply_ladder(state: Statevector, evolution: Evolution, method: str = "fused") -> Statevector:
    """The textbook controlled-``U**(2**j)`` ladder over every phase qubit."""
    for j in range(state.layout.n_q):
        apply_controlled_power(state, evolution, j, 1 << j, method)
    return state


def dense_unitary(evolution: Evolution, include_e0: bool = True) -> np.ndarray:
    """Dense matrix of the evolution, independent of the gate primitive.

    Trotter plans are multiplied out factor by factor from Kronecker-product
    Pauli matrices; exact evolution uses ``eigh``.
    """
    _check_dense(evolution.n_qubits)
    dim = 1 << evolution.n_qubits
    if isinstance(evolution, TrotterPlan):
        step = np.eye(dim, dtype=complex)
        ident = np.eye(dim, dtype=complex)
        for angle, s in evolution.step_sequence():
            factor = np.cos(angle) * ident + 1j * np.sin(angle) * kron_matrix(s)
            step = factor @ step
        u = np.linalg.matrix_power(step, evolution.n_steps)
    else:
        evals, evecs = np.linalg.eigh(evolution.h.to_matrix())
        u = (evecs * np.exp(1j * evals * evolution.T)) @ evecs.conj().T
    if include_e0:
        u = u * np.exp(-1j * evolution.e0 * evolution.T)
    return u


def exact_unitary(h: PauliSum, e0: float, T: float) -> np.ndarray:
    return dense_unitary(ExactEvolution(h, e0, T))
