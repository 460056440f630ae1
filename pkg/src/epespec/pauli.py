"""Pauli-string algebra and the Jordan-Wigner fermion encoding.

Conventions used throughout the package:

* ``PauliString.letters[i]`` acts on qubit ``i``.
* Computational basis indices are little-endian: qubit ``i`` carries bit ``2**i``.
  Dense matrices are therefore ``kron(P[n-1], ..., P[0])``.
* Fermionic mode ``mu`` maps to qubit ``mu``; the Jordan-Wigner Z string of
  mode ``mu`` acts on the qubits ``nu < mu``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionError, HermiticityError, SchemaError, ValidationError

MERGE_TOL = 1e-14
HERMITIAN_TOL = 1e-12

_LETTERS = "IXYZ"

# (a, b) -> (phase, product) for single-qubit Pauli products a*b.
_PRODUCT_TABLE: dict[tuple[str, str], tuple[complex, str]] = {}
for _a in _LETTERS:
    _PRODUCT_TABLE[("I", _a)] = (1, _a)
    _PRODUCT_TABLE[(_a, "I")] = (1, _a)
    _PRODUCT_TABLE[(_a, _a)] = (1, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PRODUCT_TABLE[(_a, _b)] = (1j, _c)
    _PRODUCT_TABLE[(_b, _a)] = (-1j, _c)


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, ``letters[i]`` on qubit ``i``."""

    letters: str

    def __post_init__(self):
        if not self.letters:
            raise ValidationError("a Pauli string needs at least one qubit")
        bad = set(self.letters) - set(_LETTERS)
        if bad:
            raise ValidationError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls("I" * n_qubits)

    @classmethod
    def from_ops(cls, n_qubits: int, ops: Mapping[int, str]) -> "PauliString":
        """Build a string from a sparse ``{qubit: letter}`` mapping."""
        letters = ["I"] * n_qubits
        for q, p in ops.items():
            if not 0 <= q < n_qubits:
                raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")
            letters[q] = p
        return cls("".join(letters))

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    @property
    def x_mask(self) -> int:
        return sum(1 << i for i, p in enumerate(self.letters) if p in "XY")

    @property
    def z_mask(self) -> int:
        return sum(1 << i for i, p in enumerate(self.letters) if p in "YZ")

    @property
    def n_y(self) -> int:
        return self.letters.count("Y")

    def action(self) -> tuple[np.ndarray, np.ndarray]:
        """Index form of the operator: ``(P v) == phase * v[perm]``.

        ``P|s> = i**n_y * (-1)**popcount(s & z_mask) |s ^ x_mask>``, so the output
        amplitude at ``t`` pulls from ``t ^ x_mask``.
        """
        idx = np.arange(1 << self.n_qubits, dtype=np.int64)
        perm = idx ^ self.x_mask
        parity = np.bitwise_count(perm & self.z_mask) & 1
        phase = (1j ** self.n_y) * (1.0 - 2.0 * parity)
        return perm, phase

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        perm, phase = self.action()
        mat = np.zeros((dim, dim), dtype=complex)
        mat[np.arange(dim), perm] = phase
        return mat

    def __str__(self) -> str:
        return self.letters


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Operator product ``a * b`` as ``(phase, string)`` with phase in {±1, ±i}."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"cannot multiply {a.n_qubits}- and {b.n_qubits}-qubit strings")
    phase: complex = 1
    out = []
    for pa, pb in zip(a.letters, b.letters):
        ph, pc = _PRODUCT_TABLE[(pa, pb)]
        phase *= ph
        out.append(pc)
    return complex(phase), PauliString("".join(out))


class PauliSum:
    """Weighted sum of Pauli strings in canonical merged form.

    Terms are kept sorted lexicographically by their letters, duplicates are
    merged and coefficients with modulus below ``1e-14`` are dropped. Instances
    are treated as immutable.
    """

    __slots__ = ("n_qubits", "_terms")

    def __init__(self, n_qubits: int, terms: Iterable[tuple[complex, PauliString | str]] = ()):
        if n_qubits < 1:
            raise ValidationError("n_qubits must be positive")
        self.n_qubits = int(n_qubits)
        acc: dict[PauliString, complex] = {}
        for coeff, string in terms:
            if isinstance(string, str):
                string = PauliString(string)
            if string.n_qubits != self.n_qubits:
                raise DimensionError(
                    f"term {string} has {string.n_qubits} qubits, expected {self.n_qubits}"
                )
            acc[string] = acc.get(string, 0j) + complex(coeff)
        self._terms = tuple(
            (c, s) for s, c in sorted(acc.items()) if abs(c) >= MERGE_TOL
        )

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, [(coeff, PauliString.identity(n_qubits))])

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @property
    def terms(self) -> tuple[tuple[complex, PauliString], ...]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def coeff(self, string: PauliString | str) -> complex:
        if isinstance(string, str):
            string = PauliString(string)
        for c, s in self._terms:
            if s == string:
                return c
        return 0j

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise DimensionError("cannot add sums over different qubit counts")
        return PauliSum(self.n_qubits, self._terms + other._terms)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __neg__(self) -> "PauliSum":
        return (-1.0) * self

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            if other.n_qubits != self.n_qubits:
                raise DimensionError("cannot multiply sums over different qubit counts")
            out = []
            for ca, sa in self._terms:
                for cb, sb in other._terms:
                    ph, s = multiply(sa, sb)
                    out.append((ca * cb * ph, s))
            return PauliSum(self.n_qubits, out)
        if isinstance(other, (int, float, complex, np.number)):
            return PauliSum(self.n_qubits, [(complex(other) * c, s) for c, s in self._terms])
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.__mul__(other)
        return NotImplemented

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, [(np.conj(c), s) for c, s in self._terms])

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return all(abs(c.imag) <= tol for c, _ in self._terms)

    def hermitian(self, tol: float = HERMITIAN_TOL) -> "PauliSum":
        """Return the sum with imaginary parts stripped, after validating them."""
        worst = max((abs(c.imag) for c, _ in self._terms), default=0.0)
        if worst > tol:
            raise HermiticityError(f"operator is not Hermitian (max |Im coeff| = {worst:.3e})")
        return PauliSum(self.n_qubits, [(c.real, s) for c, s in self._terms])

    def approx_equal(self, other: "PauliSum", tol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= tol for c, _ in diff)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_qubits, self._terms))

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        rows = np.arange(dim)
        for c, s in self._terms:
            perm, phase = s.action()
            mat[rows, perm] += c * phase
        return mat

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Apply the operator to a state vector over ``n_qubits`` qubits."""
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (1 << self.n_qubits,):
            raise DimensionError(f"vector of shape {vec.shape} does not fit {self.n_qubits} qubits")
        out = np.zeros_like(vec)
        for c, s in self._terms:
            perm, phase = s.action()
            out += c * phase * vec[perm]
        return out

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [{"coeff": [c.real, c.imag], "pauli": s.letters} for c, s in self._terms],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PauliSum":
        try:
            n = int(data["n_qubits"])
            terms = [(complex(t["coeff"][0], t["coeff"][1]), t["pauli"]) for t in data["terms"]]
            return cls(n, terms)
        except (KeyError, TypeError, IndexError, ValidationError) as exc:
            raise SchemaError(f"malformed PauliSum object: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PauliSum":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g})*{s}" for c, s in self._terms) or "0"
        return f"PauliSum[{self.n_qubits}]({body})"


def matrix_to_pauli(matrix: np.ndarray, tol: float = MERGE_TOL) -> PauliSum:
    """Expand a dense ``2**n x 2**n`` matrix in the Pauli basis.

    Uses ``coeff_P = tr(P^dagger M) / 2**n`` evaluated through the index form
    of each string, so the cost is ``4**n * 2**n``.
    """
    matrix = np.asarray(matrix, dtype=complex)
    dim = matrix.shape[0]
    n = dim.bit_length() - 1
    if matrix.shape != (dim, dim) or dim != 1 << n or n < 1:
        raise DimensionError(f"matrix shape {matrix.shape} is not 2**n square")
    rows = np.arange(dim)
    terms = []
    for letters in product(_LETTERS, repeat=n):
        s = PauliString("".join(letters))
        perm, phase = s.action()
        # tr(P^dag M) = sum_t conj(P[t, perm[t]]) * M[t, perm[t]]
        c = np.sum(np.conj(phase) * matrix[rows, perm]) / dim
        if abs(c) >= tol:
            terms.append((c, s))
    return PauliSum(n, terms)


def jordan_wigner(mode: int, n_modes: int, kind: str = "annihilation") -> PauliSum:
    """Jordan-Wigner image of ``c_mode`` or ``c_mode^dagger``.

    ``c_mu = (prod_{nu<mu} Z_nu)(X_mu + iY_mu)/2`` and the creation operator
    takes the opposite sign on the ``Y`` term.
    """
    if not 0 <= mode < n_modes:
        raise IndexError(f"mode {mode} out of range for {n_modes} modes")
    if kind not in ("annihilation", "creation"):
        raise ValidationError(f"unknown operator kind {kind!r}")
    sign = 1.0 if kind == "annihilation" else -1.0
    z = {nu: "Z" for nu in range(mode)}
    x = PauliString.from_ops(n_modes, {**z, mode: "X"})
    y = PauliString.from_ops(n_modes, {**z, mode: "Y"})
    return PauliSum(n_modes, [(0.5, x), (0.5j * sign, y)])


def _check_hermitian_matrix(matrix: np.ndarray, tol: float) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"one-body matrix must be square, got {matrix.shape}")
    dev = np.max(np.abs(matrix - matrix.conj().T), initial=0.0)
    if dev > tol:
        raise HermiticityError(f"one-body matrix is not Hermitian (max deviation {dev:.3e})")
    return matrix


def one_body_to_pauli(matrix: np.ndarray, constant: float = 0.0, tol: float = HERMITIAN_TOL) -> PauliSum:
    """Encode ``sum_{mu,nu} M[mu,nu] c_mu^dagger c_nu + constant`` as a Pauli sum.

    Args:
        matrix: Hermitian ``n x n`` one-body coefficient matrix over modes.
        constant: Real scalar added as an identity term.
        tol: Hermiticity tolerance on ``matrix``.

    Returns:
        Hermitian PauliSum on ``n`` qubits with real coefficients.
    """
    matrix = _check_hermitian_matrix(matrix, tol)
    n = matrix.shape[0]
    if n < 1:
        raise DimensionError("one-body matrix must have at least one mode")
    creators = [jordan_wigner(mu, n, "creation") for mu in range(n)]
    annihilators = [jordan_wigner(mu, n, "annihilation") for mu in range(n)]
    total = PauliSum.identity(n, constant)
    for mu in range(n):
        for nu in range(n):
            m = matrix[mu, nu]
            if abs(m) < MERGE_TOL:
                continue
            total = total + m * (creators[mu] * annihilators[nu])
    # Residual imaginary parts are rounding noise once the input passed the check.
    return total.hermitian(tol=1e-10 * max(1.0, float(np.abs(matrix).max())))


@dataclass(frozen=True)
class LcuDecomposition:
    """``B = sum_l lambdas[l] * phases[l] * strings[l]`` with ``lambdas >= 0``."""

    n_qubits: int
    lambdas: tuple[float, ...]
    phases: tuple[complex, ...]
    strings: tuple[PauliString, ...]

    @property
    def lambda_sum(self) -> float:
        return float(sum(self.lambdas))

    @property
    def n_terms(self) -> int:
        return len(self.lambdas)

    @property
    def unitaries(self) -> tuple[tuple[complex, PauliString], ...]:
        return tuple(zip(self.phases, self.strings))

    def to_pauli_sum(self) -> PauliSum:
        return PauliSum(
            self.n_qubits,
            [(lam * ph, s) for lam, ph, s in zip(self.lambdas, self.phases, self.strings)],
        )


def lcu_decompose(op: PauliSum) -> LcuDecomposition:
    """Split each term into a non-negative weight and a phased Pauli unitary."""
    lambdas, phases, strings = [], [], []
    for c, s in op:
        lam = abs(c)
        if lam == 0.0:
            continue
        lambdas.append(lam)
        phases.append(c / lam)
        strings.append(s)
    return LcuDecomposition(op.n_qubits, tuple(lambdas), tuple(phases), tuple(strings))
