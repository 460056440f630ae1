"""Dense statevector simulator over a phase / system / ancilla register layout.

The flat amplitude index is little-endian over all qubits with the phase
register in the lowest bits, then the system register, then the ancillas::

    index = k + 2**n_q * (s + 2**n_s * a)

``Statevector.tensor()`` exposes the same buffer as an array of shape
``(2**n_a, 2**n_s, 2**n_q)``; every gate below works on that view in place.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionError,
    NormalizationError,
    PostselectionError,
    PreconditionError,
    ResourceError,
    ValidationError,
)
from .pauli import PauliString

DEFAULT_QUBIT_CAP = 24
NORM_TOL = 1e-10

# Axis of each register inside Statevector.tensor().
_AXIS = {"ancilla": 0, "system": 1, "phase": 2}


@dataclass(frozen=True)
class RegisterLayout:
    n_q: int
    n_s: int
    n_a: int = 0
    cap: int = DEFAULT_QUBIT_CAP

    def __post_init__(self):
        if self.n_q < 1 or self.n_s < 1 or self.n_a < 0:
            raise ValidationError(f"invalid register widths {self.widths}")
        if self.total > self.cap:
            raise ResourceError(f"{self.total} qubits exceed the cap of {self.cap}")

    @property
    def total(self) -> int:
        return self.n_q + self.n_s + self.n_a

    @property
    def widths(self) -> tuple[int, int, int]:
        return (self.n_q, self.n_s, self.n_a)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (1 << self.n_a, 1 << self.n_s, 1 << self.n_q)

    def width(self, register: str) -> int:
        return {"phase": self.n_q, "system": self.n_s, "ancilla": self.n_a}[register]


class Statevector:
    """Amplitudes of the joint phase/system/ancilla state.

    Mutating operations work in place and return the same object so calls can
    be chained.
    """

    def __init__(self, layout: RegisterLayout, amplitudes: np.ndarray):
        amplitudes = np.ascontiguousarray(amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size != 1 << layout.total:
            raise DimensionError(
                f"{amplitudes.size} amplitudes do not fit layout {layout.widths}"
            )
        self.layout = layout
        self.amplitudes = amplitudes

    @classmethod
    def zero(cls, layout: RegisterLayout) -> "Statevector":
        amps = np.zeros(1 << layout.total, dtype=complex)
        amps[0] = 1.0
        return cls(layout, amps)

    @classmethod
    def from_system(cls, layout: RegisterLayout, psi: np.ndarray) -> "Statevector":
        """Phase and ancilla registers in ``|0...0>``, system register in ``psi``."""
        psi = np.asarray(psi, dtype=complex)
        if psi.shape != (1 << layout.n_s,):
            raise DimensionError(f"system state of shape {psi.shape} does not fit {layout.n_s} qubits")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > NORM_TOL:
            raise NormalizationError(f"system state has norm {norm:.12f}")
        state = cls(layout, np.zeros(1 << layout.total, dtype=complex))
        state.tensor()[0, :, 0] = psi
        return state

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.shape)

    def copy(self) -> "Statevector":
        return Statevector(self.layout, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def input_amplitudes(n_q: int, kind: str) -> np.ndarray:
    """Phase-register input coefficients ``a_j`` for ``j = 0..2**n_q - 1``.

    ``uniform`` is the Hadamard state ``1/sqrt(N)``; ``sin`` is the entangled
    input ``sqrt(2/N) sin(pi j / N)``.
    """
    n = 1 << n_q
    if kind == "uniform":
        return np.full(n, 1.0 / np.sqrt(n))
    if kind == "sin":
        amps = np.sqrt(2.0 / n) * np.sin(np.pi * np.arange(n) / n)
        amps[0] = 0.0
        return amps
    raise ValidationError(f"unknown input kind {kind!r}")


def prepare_input(state: Statevector, kind: str) -> Statevector:
    """Initialize the phase register with the uniform or sin input state."""
    t = state.tensor()
    if np.any(np.abs(t[:, :, 1:]) > 1e-14):
        raise PreconditionError("phase register is not in |0...0>")
    a = input_amplitudes(state.layout.n_q, kind)
    t[:, :, :] = t[:, :, :1] * a[None, None, :]
    return state


def _phase_indices(n_q: int, controls: Iterable[int]) -> np.ndarray | None:
    controls = list(controls)
    if not controls:
        return None
    mask = 0
    for c in controls:
        if not 0 <= c < n_q:
            raise DimensionError(f"control qubit {c} is not in the {n_q}-qubit phase register")
        mask |= 1 << c
    k = np.arange(1 << n_q)
    return np.nonzero((k & mask) == mask)[0]


def rotate_system(block: np.ndarray, angle: float, perm: np.ndarray, phase: np.ndarray) -> None:
    """In-place ``exp(i angle P)`` on a block whose axis 1 is the system register."""
    c, s = np.cos(angle), np.sin(angle)
    if np.all(perm == np.arange(perm.size)):
        block *= (c + 1j * s * phase)[None, :, None]
        return
    pv = phase[None, :, None] * block[:, perm, :]
    block *= c
    block += (1j * s) * pv


def apply_pauli_rotation(
    state: Statevector,
    angle: float,
    string: PauliString,
    controls: Sequence[int] = (),
) -> Statevector:
    """Apply ``exp(i angle P)`` to the system register.

    Args:
        state: Target state, modified in place.
        angle: Rotation angle in radians.
        string: Pauli string over the system register.
        controls: Phase-register qubits that must all read 1 for the gate to act.
    """
    if string.n_qubits != state.layout.n_s:
        raise DimensionError(
            f"{string.n_qubits}-qubit string on a {state.layout.n_s}-qubit system register"
        )
    perm, phase = string.action()
    t = state.tensor()
    idx = _phase_indices(state.layout.n_q, controls)
    if idx is None:
        rotate_system(t, angle, perm, phase)
    else:
        block = t[:, :, idx]
        rotate_system(block, angle, perm, phase)
        t[:, :, idx] = block
    return state


def apply_system_operator(
    state: Statevector,
    matrix: np.ndarray,
    controls: Sequence[int] = (),
) -> Statevector:
    """Apply a dense system-register matrix, optionally controlled on phase qubits."""
    dim = 1 << state.layout.n_s
    if matrix.shape != (dim, dim):
        raise DimensionError(f"matrix {matrix.shape} does not act on {state.layout.n_s} qubits")
    t = state.tensor()
    idx = _phase_indices(state.layout.n_q, controls)
    if idx is None:
        t[:, :, :] = np.einsum("st,atk->ask", matrix, t)
    else:
        t[:, :, idx] = np.einsum("st,atk->ask", matrix, t[:, :, idx])
    return state


def apply_phase_gate(state: Statevector, qubit: int, phi: float) -> Statevector:
    """``diag(1, exp(i phi))`` on one phase-register qubit."""
    t = _split_phase_qubit(state, qubit)
    t[..., 1, :] *= np.exp(1j * phi)
    return state


def _split_phase_qubit(state: Statevector, qubit: int) -> np.ndarray:
    n_q = state.layout.n_q
    if not 0 <= qubit < n_q:
        raise DimensionError(f"qubit {qubit} is not in the {n_q}-qubit phase register")
    a, s, _ = state.layout.shape
    return state.tensor().reshape(a, s, 1 << (n_q - qubit - 1), 2, 1 << qubit)


def _hadamard(state: Statevector, qubit: int) -> None:
    t = _split_phase_qubit(state, qubit)
    lo = t[..., 0, :].copy()
    hi = t[..., 1, :]
    t[..., 0, :] = (lo + hi) / np.sqrt(2.0)
    t[..., 1, :] = (lo - hi) / np.sqrt(2.0)


def _controlled_phase(state: Statevector, q1: int, q2: int, phi: float) -> None:
    k = np.arange(1 << state.layout.n_q)
    mask = (1 << q1) | (1 << q2)
    idx = np.nonzero((k & mask) == mask)[0]
    state.tensor()[:, :, idx] *= np.exp(1j * phi)


def _reverse_phase_bits(state: Statevector) -> None:
    n_q = state.layout.n_q
    k = np.arange(1 << n_q)
    rev = np.zeros_like(k)
    for b in range(n_q):
        rev |= ((k >> b) & 1) << (n_q - 1 - b)
    t = state.tensor()
    t[:, :, :] = t[:, :, rev]


def _qft_gates(state: Statevector, sign: float) -> None:
    # Textbook circuit with the most significant qubit processed first.
    n_q = state.layout.n_q
    ops = []
    for m in range(n_q - 1, -1, -1):
        ops.append(("h", m))
        for c in range(m - 1, -1, -1):
            ops.append(("cp", c, m, np.pi / (1 << (m - c))))
    if sign > 0:
        for op in ops:
            if op[0] == "h":
                _hadamard(state, op[1])
            else:
                _controlled_phase(state, op[1], op[2], op[3])
        _reverse_phase_bits(state)
    else:
        _reverse_phase_bits(state)
        for op in reversed(ops):
            if op[0] == "h":
                _hadamard(state, op[1])
            else:
                _controlled_phase(state, op[1], op[2], -op[3])


def apply_qft(state: Statevector, method: str = "fft") -> Statevector:
    """Forward QFT on the phase register: ``|j> -> N**-0.5 sum_k e^{2 pi i jk/N} |k>``."""
    if method == "fft":
        t = state.tensor()
        t[:, :, :] = np.fft.ifft(t, axis=2, norm="ortho")
    elif method == "gates":
        _qft_gates(state, +1.0)
    else:
        raise ValidationError(f"unknown QFT method {method!r}")
    return state


def apply_inverse_qft(state: Statevector, method: str = "fft") -> Statevector:
    """Inverse QFT on the phase register.

    An input pattern ``exp(i theta j)`` over phase index ``j`` concentrates at
    ``k ~ theta N / 2 pi``.
    """
    if method == "fft":
        t = state.tensor()
        t[:, :, :] = np.fft.fft(t, axis=2, norm="ortho")
    elif method == "gates":
        _qft_gates(state, -1.0)
    else:
        raise ValidationError(f"unknown QFT method {method!r}")
    return state


@dataclass(frozen=True)
class Distribution:
    """Exact outcome probabilities over the registers in ``registers``.

    ``probs`` has one axis per register, in the order given.
    """

    probs: np.ndarray
    registers: tuple[str, ...]

    def total(self) -> float:
        return float(self.probs.sum())

    def marginal(self, register: str) -> np.ndarray:
        axis = self.registers.index(register)
        other = tuple(i for i in range(self.probs.ndim) if i != axis)
        return self.probs.sum(axis=other)

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {idx: float(p) for idx, p in np.ndenumerate(self.probs) if p > 0}


def measure_distribution(state: Statevector, registers: Sequence[str] = ("phase",)) -> Distribution:
    registers = tuple(registers)
    for r in registers:
        if r not in _AXIS:
            raise ValidationError(f"unknown register {r!r}")
    p = np.abs(state.tensor()) ** 2
    drop = tuple(ax for name, ax in _AXIS.items() if name not in registers)
    p = p.sum(axis=drop)
    kept = sorted((_AXIS[r], r) for r in registers)
    order = [[name for _, name in kept].index(r) for r in registers]
    return Distribution(np.transpose(p, order).copy(), registers)


def sample(dist: Distribution, shots: int, seed=None) -> np.ndarray:
    """Multinomial histogram of ``shots`` draws, shaped like ``dist.probs``.

    Sub-normalized distributions are renormalized, i.e. draws are conditioned
    on the listed outcomes.
    """
    if shots < 1:
        raise ValidationError("shots must be at least 1")
    p = np.clip(dist.probs.ravel(), 0.0, None)
    total = p.sum()
    if p.size == 0 or total <= 0:
        raise ValidationError("cannot sample from an empty distribution")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, p / total)
    return counts.reshape(dist.probs.shape)


def project(state: Statevector, register: str, outcome: int) -> tuple[float, Statevector]:
    """Project one register onto a basis outcome and renormalize."""
    width = state.layout.width(register)
    if not 0 <= outcome < 1 << width:
        raise ValidationError(f"outcome {outcome} invalid for a {width}-qubit register")
    t = state.tensor()
    sl = [slice(None)] * 3
    sl[_AXIS[register]] = outcome
    prob = float(np.sum(np.abs(t[tuple(sl)]) ** 2))
    if prob <= 1e-300:
        raise PostselectionError(f"outcome {outcome} on {register} register has zero probability")
    out = np.zeros_like(t)
    out[tuple(sl)] = t[tuple(sl)] / np.sqrt(prob)
    return prob, Statevector(state.layout, out)


def save_dump(state: Statevector, path: str | Path) -> None:
    """Debug dump: three little-endian uint32 widths, then complex128 pairs."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<3I", *state.layout.widths))
        fh.write(state.amplitudes.astype("<c16").tobytes())


def load_dump(path: str | Path, cap: int = DEFAULT_QUBIT_CAP) -> Statevector:
    raw = Path(path).read_bytes()
    n_q, n_s, n_a = struct.unpack("<3I", raw[:12])
    layout = RegisterLayout(n_q, n_s, n_a, cap=cap)
    return Statevector(layout, np.frombuffer(raw[12:], dtype="<c16").copy())
