"""Circuits inserting the response operator B ahead of phase estimation.

Two encodings are provided:

* ``jw_mode``: one ancilla. A CNOT copies the occupation of mode ``mu`` onto
  the ancilla, then ``P_mu = (prod_{nu<mu} Z_nu) X_mu`` hits the system. The
  ancilla-1 branch carries ``c_mu|psi>`` (hole part), the ancilla-0 branch
  ``c_mu^dagger|psi>`` (particle part); normalization factor 1.
* ``lcu``: ``V_B = PREP^dagger SELECT PREP`` on ``ceil(log2 N_B)`` ancillas.
  Postselecting the ancillas on ``|0...0>`` leaves ``B|psi> / sum(lambda)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, PreconditionError, ValidationError
from .pauli import LcuDecomposition, PauliString, PauliSum, jordan_wigner, lcu_decompose
from .statevector import Statevector, _phase_indices

_ANCILLA_TOL = 1e-14


@dataclass(frozen=True)
class BEncoding:
    kind: str
    n_system: int
    mode: int | None = None
    lcu: LcuDecomposition | None = None

    def __post_init__(self):
        if self.kind == "jw_mode":
            if self.mode is None or not 0 <= self.mode < self.n_system:
                raise ValidationError(f"JW mode {self.mode} out of range")
        elif self.kind == "lcu":
            if self.lcu is None or self.lcu.n_terms == 0 or self.lcu.lambda_sum <= 0:
                raise ValidationError("LCU encoding needs a non-empty decomposition")
            if self.lcu.n_qubits != self.n_system:
                raise DimensionError("LCU operator width differs from the system register")
        else:
            raise ValidationError(f"unknown encoding kind {self.kind!r}")

    @classmethod
    def jw(cls, mode: int, n_system: int) -> "BEncoding":
        return cls("jw_mode", n_system, mode=mode)

    @classmethod
    def from_operator(cls, op: PauliSum) -> "BEncoding":
        return cls("lcu", op.n_qubits, lcu=lcu_decompose(op))

    @property
    def n_ancilla(self) -> int:
        if self.kind == "jw_mode":
            return 1
        return math.ceil(math.log2(self.lcu.n_terms)) if self.lcu.n_terms > 1 else 0

    def operator(self, branch: str | None = None) -> PauliSum:
        """The system operator a given ancilla branch carries."""
        if self.kind == "lcu":
            return self.lcu.to_pauli_sum()
        kind = {"hole": "annihilation", "particle": "creation"}.get(branch)
        if kind is None:
            raise ValidationError("JW encoding needs branch 'hole' or 'particle'")
        return jordan_wigner(self.mode, self.n_system, kind)

    def describe(self) -> dict:
        if self.kind == "jw_mode":
            return {"kind": "jw_mode", "mode": self.mode, "n_ancilla": 1}
        return {
            "kind": "lcu",
            "n_terms": self.lcu.n_terms,
            "lambda_sum": self.lcu.lambda_sum,
            "n_ancilla": self.n_ancilla,
        }


def normalization_factor(enc: BEncoding) -> float:
    """``N`` with ``sbar(omega_k) = P(k) / N``: 1 for JW, ``sum(lambda)**-2`` for LCU."""
    if enc.kind == "jw_mode":
        return 1.0
    return enc.lcu.lambda_sum ** -2


def _controlled_block(state: Statevector, controls: Sequence[int] | np.ndarray | None):
    t = state.tensor()
    if controls is None:
        return t, None
    idx = np.asarray(controls) if isinstance(controls, np.ndarray) else _phase_indices(state.layout.n_q, controls)
    return t[:, :, idx], idx


def _require_ancilla_zero(block: np.ndarray, n_a: int) -> None:
    if block.shape[0] < 2 ** n_a:
        raise DimensionError(f"ancilla register too narrow for {n_a} qubits")
    if np.any(np.abs(block[1:]) > _ANCILLA_TOL):
        raise PreconditionError("ancilla register is not in |0...0>")


def apply_vb_jw(state: Statevector, mode: int, branches: np.ndarray | None = None) -> Statevector:
    """Single-ancilla insertion of ``c_mode`` (ancilla 1) and ``c_mode^dagger`` (ancilla 0).

    Args:
        state: State with at least one ancilla qubit, modified in place.
        mode: Fermionic mode index ``mu`` on the system register.
        branches: Optional phase-register basis indices the gate is controlled
            on (the multiply-controlled variant); ``None`` means uncontrolled.
    """
    n_s = state.layout.n_s
    if state.layout.n_a < 1:
        raise DimensionError("JW insertion needs an ancilla qubit")
    if not 0 <= mode < n_s:
        raise IndexError(f"mode {mode} out of range for {n_s} system qubits")
    block, idx = _controlled_block(state, branches)
    _require_ancilla_zero(block, 1)
    s = np.arange(1 << n_s)
    occupied = ((s >> mode) & 1).astype(bool)
    # CNOT: ancilla bit 0 <- occupation of the mode.
    moved = block[0][occupied].copy()
    block[0][occupied] = 0.0
    block[1][occupied] = moved
    p_mu = PauliString.from_ops(n_s, {**{nu: "Z" for nu in range(mode)}, mode: "X"})
    perm, phase = p_mu.action()
    block[:] = phase[None, :, None] * block[:, perm, :]
    if idx is not None:
        state.tensor()[:, :, idx] = block
    return state


def _prep_vector(enc: BEncoding) -> np.ndarray:
    lam = np.asarray(enc.lcu.lambdas)
    v = np.zeros(1 << enc.n_ancilla)
    v[: lam.size] = np.sqrt(lam / lam.sum())
    return v


def _householder(block: np.ndarray, v: np.ndarray) -> None:
    """In place ``R = I - 2 u u^T / u^T u`` with ``u = e0 - v`` on axis 0.

    ``R`` is real, symmetric and unitary with ``R e0 = v``, so it serves as both
    PREP and PREP^dagger.
    """
    u = -v.copy()
    u[0] += 1.0
    uu = float(u @ u)
    if uu < 1e-30:
        return
    na = v.size
    proj = np.tensordot(u, block[:na], axes=(0, 0))
    block[:na] -= (2.0 / uu) * u[:, None, None] * proj[None]


def apply_prep(state: Statevector, enc: BEncoding) -> Statevector:
    _householder(state.tensor(), _prep_vector(enc))
    return state


def _select(block: np.ndarray, enc: BEncoding) -> None:
    for l, (ph, s) in enumerate(enc.lcu.unitaries):
        perm, phase = s.action()
        block[l] = ph * phase[:, None] * block[l][perm, :]


def apply_vb_lcu(state: Statevector, enc: BEncoding, branches: np.ndarray | None = None) -> Statevector:
    """``PREP^dagger . SELECT . PREP`` on the ancilla and system registers."""
    if enc.kind != "lcu":
        raise ValidationError("apply_vb_lcu needs an LCU encoding")
    if state.layout.n_a != enc.n_ancilla:
        raise DimensionError(
            f"LCU over {enc.lcu.n_terms} terms needs {enc.n_ancilla} ancillas, layout has {state.layout.n_a}"
        )
    if enc.n_system != state.layout.n_s:
        raise DimensionError("LCU operator width differs from the system register")
    block, idx = _controlled_block(state, branches)
    _require_ancilla_zero(block, enc.n_ancilla)
    v = _prep_vector(enc)
    _householder(block, v)
    _select(block, enc)
    _householder(block, v)
    if idx is not None:
        state.tensor()[:, :, idx] = block
    return state


def apply_vb(state: Statevector, enc: BEncoding, branches: np.ndarray | None = None) -> Statevector:
    if enc.kind == "jw_mode":
        return apply_vb_jw(state, enc.mode, branches)
    return apply_vb_lcu(state, enc, branches)
