"""Problem builders and operator-bundle ingestion.

* Electron-plasmon model ``H = eps c^dag c + g c c^dag (b + b^dag) + w_p b^dag b``
  with its closed-form Poisson hole spectrum.
* Dipole operators from one-body integrals.
* Hermitized electromagnetic multipole operators from spherical components.
* JSON operator bundles (Hamiltonian, reference state, named operators).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple

import jsonschema
import numpy as np

from .errors import HermiticityError, NormalizationError, ResourceError, SchemaError, ValidationError
from .evolution import DENSE_QUBIT_CAP
from .pauli import PauliSum, matrix_to_pauli, one_body_to_pauli
from .spectral import LineSpectrum

TRUNCATION_TOL = 1e-8


@dataclass(frozen=True)
class PlasmonConfig:
    epsilon: float = -1.0
    omega_p: float = 1.0
    g: float = 0.8
    n_b: int = 5
    encoding: str = "fock_binary"

    def __post_init__(self):
        if self.omega_p <= 0:
            raise ValidationError("omega_p must be positive")
        if self.n_b < 2:
            raise ValidationError("n_b must be at least 2")
        if self.encoding not in ("fock_binary", "position_grid"):
            raise ValidationError(f"unknown boson encoding {self.encoding!r}")

    @property
    def n_system(self) -> int:
        return 1 + self.n_b


class PlasmonProblem(NamedTuple):
    h: PauliSum
    e0: float
    psi0: np.ndarray
    b_mode: int


def _boson_matrices(n_b: int, encoding: str) -> tuple[np.ndarray, np.ndarray]:
    """``(b + b^dag, b^dag b)`` on ``2**n_b`` levels."""
    dim = 1 << n_b
    if encoding == "fock_binary":
        off = np.sqrt(np.arange(1, dim))
        displacement = np.diag(off, 1) + np.diag(off, -1)
        number = np.diag(np.arange(dim, dtype=float))
        return displacement, number
    # Position grid of the oscillator in units where b = (x + ip)/sqrt(2).
    step = np.sqrt(2.0 * np.pi / dim)
    x = (np.arange(dim) - (dim - 1) / 2.0) * step
    p = 2.0 * np.pi * np.fft.fftfreq(dim, d=step)
    f = np.fft.fft(np.eye(dim), axis=0, norm="ortho")
    p2 = f.conj().T @ np.diag(p ** 2) @ f
    number = 0.5 * (np.diag(x ** 2) + p2) - 0.5 * np.eye(dim)
    number = 0.5 * (number + number.conj().T)
    edge = np.exp(-0.5 * x[0] ** 2)
    if edge > TRUNCATION_TOL:
        warnings.warn(f"position grid too small: vacuum amplitude {edge:.2e} at the boundary")
    return np.sqrt(2.0) * np.diag(x), number


def build_plasmon(cfg: PlasmonConfig) -> PlasmonProblem:
    """Qubit Hamiltonian, ground state and response mode of the plasmon model.

    Qubit 0 is the core-electron mode, qubits ``1..n_b`` the boson register
    (little endian). The ground state holds the core electron with the boson
    in its vacuum; the hole spectrum is obtained with ``B = c`` on mode 0.
    """
    n_b = cfg.n_b
    if cfg.n_system > DENSE_QUBIT_CAP:
        raise ResourceError(f"plasmon model assembled densely; 1 + n_b must not exceed {DENSE_QUBIT_CAP}")
    dim_b = 1 << n_b
    disp, number = _boson_matrices(n_b, cfg.encoding)
    occ = np.diag([0.0, 1.0])  # c^dag c on qubit 0
    emp = np.diag([1.0, 0.0])  # c c^dag
    eye_b = np.eye(dim_b)
    # Qubit 0 is the least significant bit: kron(boson, fermion).
    h_mat = (
        cfg.epsilon * np.kron(eye_b, occ)
        + cfg.g * np.kron(disp, emp)
        + cfg.omega_p * np.kron(number, np.eye(2))
    )
    h = matrix_to_pauli(h_mat).hermitian()
    # The hole sector ground state is the displaced vacuum; it must fit in the register.
    _, hole_vecs = np.linalg.eigh(cfg.g * disp + cfg.omega_p * number)
    top = float(abs(hole_vecs[-1, 0]) ** 2)
    if cfg.encoding == "fock_binary" and top > TRUNCATION_TOL:
        warnings.warn(f"boson truncation: top Fock level carries weight {top:.2e}")
    evals, evecs = np.linalg.eigh(number)
    vac = evecs[:, 0]
    vac = vac * np.exp(-1j * np.angle(vac[np.argmax(np.abs(vac))]))
    psi0 = np.kron(vac, np.array([0.0, 1.0])).astype(complex)
    e0 = cfg.epsilon + cfg.omega_p * float(evals[0])
    return PlasmonProblem(h, e0, psi0, 0)


def exact_plasmon_spectrum(cfg: PlasmonConfig, n_max: int) -> LineSpectrum:
    """Closed-form hole lines ``omega_n = eps + g^2/w_p - n w_p``, Poisson weights.

    Stored in the circuit frame (``delta_e = -omega_n``, ``energy_sign = -1``)
    so the result compares directly with circuit and oracle spectra.
    """
    if n_max < 0:
        raise ValidationError("n_max must be non-negative")
    alpha2 = (cfg.g / cfg.omega_p) ** 2
    n = np.arange(n_max + 1)
    omega = cfg.epsilon + cfg.g ** 2 / cfg.omega_p - n * cfg.omega_p
    weights = np.array([math.exp(-alpha2) * alpha2 ** int(k) / math.factorial(int(k)) for k in n])
    return LineSpectrum(-omega, weights, cfg.epsilon, energy_sign=-1)


def spin_orbital_matrix(spatial: np.ndarray) -> np.ndarray:
    """Spin-conserving expansion, ordering ``(p, up), (p, down), (p+1, up), ...``."""
    return np.kron(np.asarray(spatial), np.eye(2))


def build_dipole(
    d_integrals: np.ndarray,
    d_core: float = 0.0,
    d_nuclear: float = 0.0,
    expand_spin: bool = False,
    tol: float = 1e-12,
) -> PauliSum:
    """Dipole component ``-sum_{mu nu} d_{mu nu}(c^dag_mu c_nu + c^dag_nu c_mu) + D_c + D_n``.

    Args:
        d_integrals: Real symmetric one-body integrals for one Cartesian axis.
        d_core: Frozen-core electronic contribution.
        d_nuclear: Nuclear contribution.
        expand_spin: Treat ``d_integrals`` as spatial and interleave spin.
        tol: Symmetry tolerance.
    """
    d = np.asarray(d_integrals, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"dipole integrals must be square, got {d.shape}")
    if np.max(np.abs(d - d.T), initial=0.0) > tol:
        raise HermiticityError("dipole integrals are not symmetric")
    if expand_spin:
        d = spin_orbital_matrix(d)
    # Both orderings of every (mu, nu) pair are summed.
    return one_body_to_pauli(-(d + d.T), constant=d_core + d_nuclear)


def hermitize_multipole(components: Mapping[int, np.ndarray], l: int, tol: float = 1e-10) -> PauliSum:
    """Hermitian combination ``sum_{m=0}^{l} Mt(l, m)`` of multipole components.

    ``Mt(l, 0) = M(l, 0)`` and ``Mt(l, m) = M(l, m) + (-1)**m M(l, -m)`` for
    ``m > 0``. Components missing from ``components`` count as zero.
    """
    mats = {int(m): np.asarray(v, dtype=complex) for m, v in components.items()}
    if not mats:
        raise ValidationError("no multipole components given")
    shapes = {v.shape for v in mats.values()}
    if len(shapes) != 1:
        raise ValidationError(f"component matrices differ in shape: {shapes}")
    (shape,) = shapes
    if any(abs(m) > l for m in mats):
        raise ValidationError(f"component index outside -{l}..{l}")
    zero = np.zeros(shape, dtype=complex)
    total = mats.get(0, zero).copy()
    for m in range(1, l + 1):
        total += mats.get(m, zero) + (-1) ** m * mats.get(-m, zero)
    dev = np.max(np.abs(total - total.conj().T), initial=0.0)
    if dev > tol:
        raise HermiticityError(f"hermitized multipole matrix is not Hermitian (deviation {dev:.3e})")
    return one_body_to_pauli(0.5 * (total + total.conj().T))


_PAULI_SUM_SCHEMA = {
    "type": "object",
    "required": ["n_qubits", "terms"],
    "properties": {
        "n_qubits": {"type": "integer", "minimum": 1},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["coeff", "pauli"],
                "properties": {
                    "coeff": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                    "pauli": {"type": "string", "pattern": "^[IXYZ]+$"},
                },
            },
        },
    },
}

BUNDLE_SCHEMA = {
    "type": "object",
    "required": ["n_qubits", "hamiltonian", "operators"],
    "properties": {
        "n_qubits": {"type": "integer", "minimum": 1},
        "hamiltonian": _PAULI_SUM_SCHEMA,
        "e0": {"type": "number"},
        "exact_ground": {"type": "boolean"},
        "ground_state": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "fock": {"type": "string", "pattern": "^[01]+$"},
        "operators": {"type": "object", "additionalProperties": _PAULI_SUM_SCHEMA},
        "units": {"type": "string"},
        "metadata": {"type": "object"},
    },
}


@dataclass(frozen=True)
class OperatorBundle:
    hamiltonian: PauliSum
    e0: float
    ground_state: np.ndarray
    operators: dict[str, PauliSum]
    units: str = ""
    metadata: dict = field(default_factory=dict)
    exact_ground: bool = False
    fock: str | None = None

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits

    def to_dict(self) -> dict:
        data = {
            "n_qubits": self.n_qubits,
            "hamiltonian": self.hamiltonian.to_dict(),
            "operators": {k: v.to_dict() for k, v in self.operators.items()},
            "units": self.units,
            "metadata": self.metadata,
        }
        if self.exact_ground:
            data["exact_ground"] = True
        elif self.fock is not None:
            data["fock"] = self.fock
            data["e0"] = self.e0
        else:
            data["ground_state"] = [[float(a.real), float(a.imag)] for a in self.ground_state]
            data["e0"] = self.e0
        return data


def fock_state(bits: str) -> np.ndarray:
    """Basis vector with character ``i`` giving the occupation of qubit ``i``."""
    index = sum(1 << i for i, b in enumerate(bits) if b == "1")
    v = np.zeros(1 << len(bits), dtype=complex)
    v[index] = 1.0
    return v


def bundle_from_dict(data: Mapping) -> OperatorBundle:
    try:
        jsonschema.validate(data, BUNDLE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"bundle schema violation: {exc.message}") from exc
    n = int(data["n_qubits"])
    h = PauliSum.from_dict(data["hamiltonian"])
    ops = {name: PauliSum.from_dict(v) for name, v in data["operators"].items()}
    for name, op in [("hamiltonian", h), *ops.items()]:
        if op.n_qubits != n:
            raise SchemaError(f"{name} acts on {op.n_qubits} qubits, bundle declares {n}")
    if not h.is_hermitian():
        raise HermiticityError("bundle Hamiltonian is not Hermitian")
    h = h.hermitian()
    exact_ground = bool(data.get("exact_ground", False))
    fock = data.get("fock")
    if exact_ground:
        evals, evecs = np.linalg.eigh(h.to_matrix())
        psi = evecs[:, 0].astype(complex)
        e0 = float(evals[0])
    else:
        if "ground_state" in data:
            psi = np.array([complex(re, im) for re, im in data["ground_state"]])
            if psi.shape != (1 << n,):
                raise SchemaError(f"ground_state has {psi.size} amplitudes, expected {1 << n}")
        elif fock is not None:
            if len(fock) != n:
                raise SchemaError(f"fock string has {len(fock)} bits, expected {n}")
            psi = fock_state(fock)
        else:
            raise SchemaError("bundle needs exact_ground, ground_state or fock")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-10:
            raise NormalizationError(f"ground state has norm {norm:.12f}")
        if "e0" not in data:
            raise SchemaError("bundle without exact_ground must give e0")
        e0 = float(data["e0"])
    return OperatorBundle(
        hamiltonian=h,
        e0=e0,
        ground_state=psi,
        operators=ops,
        units=data.get("units", ""),
        metadata=dict(data.get("metadata", {})),
        exact_ground=exact_ground,
        fock=fock,
    )


def load_bundle(path: str | Path) -> OperatorBundle:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return bundle_from_dict(data)


def save_bundle(bundle: OperatorBundle, path: str | Path) -> None:
    Path(path).write_text(json.dumps(bundle.to_dict(), indent=2))
