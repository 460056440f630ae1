"""Discrete response spectra from phase-estimation circuits and their oracle.

Three routes produce a ``SpectrumResult`` on the grid
``omega_k = 2 pi k / (N T)``:

* ``run_circuit``: input state, ``V_B``, controlled-``U`` ladder, inverse QFT,
  exact readout of the phase and ancilla registers.
* ``run_appendix_circuit``: uncontrolled ``U' = exp(iHT)`` interleaved with
  phase-register-controlled ``V_B``; needs neither ``E0`` nor controlled
  evolution.
* ``convolve``: exact transition lines broadened by the readout kernel.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.linalg import schur

from .block_encoding import BEncoding, apply_vb, normalization_factor
from .errors import NormalizationError, PostselectionError, ResourceError, ValidationError
from .evolution import DENSE_QUBIT_CAP, Evolution, apply_evolution, apply_ladder, dense_unitary
from .pauli import PauliSum
from .statevector import (
    RegisterLayout,
    Statevector,
    apply_inverse_qft,
    input_amplitudes,
    measure_distribution,
    prepare_input,
    sample,
)

TWO_PI = 2.0 * np.pi
_SERIES_CUTOFF = 1e-8
LINE_WEIGHT_CUTOFF = 1e-14
# Branch probabilities below this are rounding noise of an exactly vanishing B|psi>.
POSTSELECTION_TOL = 1e-24


def _dirichlet_sq(x: np.ndarray, n: int) -> np.ndarray:
    """``sin^2(n x / 2) / sin^2(x / 2)`` with the removable pole at ``x = 0 mod 2 pi``."""
    x = np.remainder(x + np.pi, TWO_PI) - np.pi
    small = np.abs(x) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    out = np.sin(0.5 * n * safe) ** 2 / np.sin(0.5 * safe) ** 2
    series = n * n * (1.0 - (n * n - 1.0) * x * x / 12.0)
    return np.where(small, series, out)


def kernel(k, theta, n_q: int, input_kind: str) -> np.ndarray:
    """Readout probability ``P(k | theta)`` for an eigenphase ``theta``.

    Broadcasts over ``k`` and ``theta``. The uniform input gives the Fejer-type
    kernel ``sin^2(N theta/2) / (N^2 sin^2((theta - 2 pi k/N)/2))``; the sin
    input gives ``cos^2(N theta/2) sin^2(pi/N) / (2 N^2 sin^2(theta_+/2)
    sin^2(theta_-/2))`` with ``theta_pm = theta - 2 pi k/N +- pi/N``.
    """
    n = 1 << n_q
    k = np.asarray(k, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if input_kind == "uniform":
        return _dirichlet_sq(theta - TWO_PI * k / n, n) / (n * n)
    if input_kind == "sin":
        x = theta - TWO_PI * k / n - np.pi / n
        y = x + TWO_PI / n
        xr = np.abs(np.remainder(x + np.pi, TWO_PI) - np.pi)
        yr = np.abs(np.remainder(y + np.pi, TWO_PI) - np.pi)
        # sin^2(n x/2) == sin^2(n y/2); put the pole on whichever is closer to zero.
        near_x = xr <= yr
        d = np.where(near_x, _dirichlet_sq(x, n), _dirichlet_sq(y, n))
        other = np.where(near_x, np.sin(0.5 * y), np.sin(0.5 * x)) ** 2
        return (np.sin(np.pi / n) ** 2 / (2.0 * n * n)) * d / other
    raise ValidationError(f"unknown input kind {input_kind!r}")


def kernel_direct(k, theta, n_q: int, input_kind: str) -> np.ndarray:
    """``(1/N) |sum_j a_j exp(i (theta - 2 pi k/N) j)|^2`` by explicit summation."""
    n = 1 << n_q
    a = input_amplitudes(n_q, input_kind)
    k = np.asarray(k, dtype=float)
    theta = np.asarray(theta, dtype=float)
    phi = (theta - TWO_PI * k / n)[..., None]
    amp = np.sum(a * np.exp(1j * phi * np.arange(n)), axis=-1)
    return np.abs(amp) ** 2 / n


@dataclass(frozen=True)
class LineSpectrum:
    """Exact transition lines ``(E_s - E0, |<psi_s|B|psi_0>|^2)``.

    ``energy_sign`` maps circuit-frame energies to the physical axis: hole
    spectra are plotted at ``omega = E0 - E_s``, i.e. sign -1.
    """

    delta_e: np.ndarray
    weights: np.ndarray
    e0: float
    energy_sign: int = 1

    def __post_init__(self):
        if np.any(np.asarray(self.weights) < 0):
            raise ValidationError("line weights must be non-negative")

    def __len__(self) -> int:
        return len(self.delta_e)

    @property
    def physical_energies(self) -> np.ndarray:
        return self.energy_sign * np.asarray(self.delta_e)

    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def to_dict(self) -> dict:
        return {
            "delta_e": [float(x) for x in self.delta_e],
            "weights": [float(x) for x in self.weights],
            "e0": self.e0,
            "energy_sign": self.energy_sign,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LineSpectrum":
        return cls(
            np.asarray(data["delta_e"], dtype=float),
            np.asarray(data["weights"], dtype=float),
            float(data["e0"]),
            int(data.get("energy_sign", 1)),
        )


def _merge_lines(energies: np.ndarray, weights: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(energies, kind="stable")
    energies, weights = energies[order], weights[order]
    out_e, out_w = [], []
    for e, w in zip(energies, weights):
        if out_e and abs(e - out_e[-1]) <= tol:
            total = out_w[-1] + w
            out_e[-1] = (out_e[-1] * out_w[-1] + e * w) / total
            out_w[-1] = total
        else:
            out_e.append(e)
            out_w.append(w)
    return np.asarray(out_e), np.asarray(out_w)


def exact_lines(
    h: PauliSum,
    psi0: np.ndarray,
    b,
    e0: float | None = None,
    evolution: Evolution | None = None,
    energy_sign: int = 1,
    merge_tol: float = 1e-11,
) -> LineSpectrum:
    """Line spectrum of ``B|psi0>`` from a dense eigendecomposition.

    Args:
        h: System Hamiltonian.
        psi0: Normalized initial state.
        b: Response operator as a PauliSum or dense matrix.
        e0: Reference energy; defaults to the lowest eigenvalue of ``h``
            (or to ``evolution.e0`` when an evolution is supplied).
        evolution: If given, eigenphases of its dense unitary replace the
            eigenvalues of ``h``. Energies are then ``phase / T`` wrapped into
            ``[0, 2 pi / T)``, which makes the result a bit-exact oracle for
            circuits built on that evolution.
        energy_sign: Stored on the result for physical-axis reporting.
        merge_tol: Lines closer than this in energy are merged.
    """
    n = h.n_qubits
    if n > DENSE_QUBIT_CAP:
        raise ResourceError(f"exact lines limited to {DENSE_QUBIT_CAP} qubits")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (1 << n,):
        raise ValidationError(f"psi0 shape {psi0.shape} does not fit {n} qubits")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise NormalizationError(f"psi0 has norm {np.linalg.norm(psi0):.12f}")
    phi = b.apply(psi0) if isinstance(b, PauliSum) else np.asarray(b, dtype=complex) @ psi0
    if evolution is None:
        evals, evecs = np.linalg.eigh(h.to_matrix())
        ref = float(evals[0]) if e0 is None else float(e0)
        energies = evals - ref
    else:
        u = dense_unitary(evolution, include_e0=True)
        tri, evecs = schur(u, output="complex")
        phases = np.remainder(np.angle(np.diag(tri)), TWO_PI)
        ref = evolution.e0 if e0 is None else float(e0)
        energies = phases / evolution.T
    weights = np.abs(evecs.conj().T @ phi) ** 2
    keep = weights >= LINE_WEIGHT_CUTOFF
    energies, weights = _merge_lines(energies[keep], weights[keep], merge_tol)
    return LineSpectrum(energies, weights, ref, energy_sign)


@dataclass
class SpectrumResult:
    n_q: int
    T: float
    omegas: np.ndarray
    prob: np.ndarray
    sbar: np.ndarray
    input_kind: str
    normalization: float
    provenance: str
    evolution: dict = field(default_factory=dict)
    encoding: dict = field(default_factory=dict)
    branch: str = "all"
    energy_sign: int = 1
    aliased: bool = False
    seed: int | None = None
    shots: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_grid(self) -> int:
        return 1 << self.n_q

    @property
    def spacing(self) -> float:
        return TWO_PI / (self.n_grid * self.T)

    @property
    def physical_omegas(self) -> np.ndarray:
        return self.energy_sign * self.omegas

    def meta(self) -> dict[str, Any]:
        return {
            "n_q": self.n_q,
            "T": self.T,
            "input_kind": self.input_kind,
            "normalization": self.normalization,
            "provenance": self.provenance,
            "evolution": self.evolution,
            "encoding": self.encoding,
            "branch": self.branch,
            "energy_sign": self.energy_sign,
            "aliased": self.aliased,
            "seed": self.seed,
            "shots": self.shots,
            **({"metadata": self.metadata} if self.metadata else {}),
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "omega", "prob", "sbar"])
            for k in range(self.n_grid):
                w.writerow([k, repr(float(self.omegas[k])), repr(float(self.prob[k])), repr(float(self.sbar[k]))])

    def save(self, stem: str | Path, extra: dict | None = None) -> tuple[Path, Path]:
        """Write ``<stem>.csv`` and the ``<stem>.json`` metadata sidecar."""
        stem = Path(stem)
        csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
        self.write_csv(csv_path)
        meta = self.meta()
        if extra:
            meta.update(extra)
        json_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
        return csv_path, json_path

    @classmethod
    def load(cls, stem: str | Path) -> "SpectrumResult":
        stem = Path(stem)
        json_path = stem.with_suffix(".json")
        meta = json.loads(json_path.read_text()) if json_path.exists() else {}
        ks, om, pr, sb = [], [], [], []
        with open(stem.with_suffix(".csv"), newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["k", "omega", "prob", "sbar"]:
                raise ValidationError(f"unexpected CSV header {reader.fieldnames}")
            for row in reader:
                ks.append(int(row["k"]))
                om.append(float(row["omega"]))
                pr.append(float(row["prob"]))
                sb.append(float(row["sbar"]))
        n = len(ks)
        n_q = n.bit_length() - 1
        if n == 0 or n != 1 << n_q or ks != list(range(n)):
            raise ValidationError("spectrum CSV must hold k = 0..2**n_q - 1 in order")
        if "T" in meta:
            T = float(meta["T"])
        else:
            T = TWO_PI / (n * (om[1] - om[0])) if n > 1 else 1.0
        return cls(
            n_q=int(meta.get("n_q", n_q)),
            T=T,
            omegas=np.asarray(om),
            prob=np.asarray(pr),
            sbar=np.asarray(sb),
            input_kind=meta.get("input_kind", "unknown"),
            normalization=float(meta.get("normalization", 1.0)),
            provenance=meta.get("provenance", "file"),
            evolution=meta.get("evolution", {}),
            encoding=meta.get("encoding", {}),
            branch=meta.get("branch", "all"),
            energy_sign=int(meta.get("energy_sign", 1)),
            aliased=bool(meta.get("aliased", False)),
            seed=meta.get("seed"),
            shots=meta.get("shots"),
            metadata=meta.get("metadata", {}),
        )


def frequency_grid(n_q: int, T: float) -> np.ndarray:
    n = 1 << n_q
    return TWO_PI * np.arange(n) / (n * T)


def convolve(
    lines: LineSpectrum,
    n_q: int,
    T: float,
    input_kind: str,
    normalization: float = 1.0,
    branch: str = "all",
) -> SpectrumResult:
    """Broaden exact lines with the readout kernel: ``sbar_k = sum_s w_s P(k | dE_s T)``."""
    n = 1 << n_q
    theta = np.asarray(lines.delta_e, dtype=float) * T
    k = np.arange(n)
    if theta.size:
        sbar = np.sum(np.asarray(lines.weights)[None, :] * kernel(k[:, None], theta[None, :], n_q, input_kind), axis=1)
    else:
        sbar = np.zeros(n)
    aliased = bool(np.any((theta < 0) | (theta >= TWO_PI)))
    return SpectrumResult(
        n_q=n_q,
        T=T,
        omegas=frequency_grid(n_q, T),
        prob=normalization * sbar,
        sbar=sbar,
        input_kind=input_kind,
        normalization=normalization,
        provenance="kernel_oracle",
        branch=branch,
        energy_sign=lines.energy_sign,
        aliased=aliased,
    )


def _default_branch(enc: BEncoding, branch: str | None) -> str:
    if enc.kind == "lcu":
        if branch not in (None, "postselected"):
            raise ValidationError("LCU spectra only have the 'postselected' branch")
        return "postselected"
    branch = branch or "hole"
    if branch not in ("hole", "particle", "all"):
        raise ValidationError(f"unknown JW branch {branch!r}")
    return branch


def _select_branch(joint: np.ndarray, enc: BEncoding, branch: str) -> np.ndarray:
    """Phase-register probabilities for the requested ancilla outcome(s)."""
    if branch == "postselected":
        return joint[:, 0]
    if branch == "hole":
        return joint[:, 1::2].sum(axis=1) if joint.shape[1] > 2 else joint[:, 1]
    if branch == "particle":
        return joint[:, 0::2].sum(axis=1) if joint.shape[1] > 2 else joint[:, 0]
    return joint.sum(axis=1)


def _finish(
    state: Statevector,
    enc: BEncoding,
    evolution: Evolution,
    n_q: int,
    input_kind: str,
    branch: str,
    provenance: str,
    shots: int | None,
    seed: int | None,
    qft_method: str,
    extra: dict,
) -> SpectrumResult:
    apply_inverse_qft(state, qft_method)
    dist = measure_distribution(state, ("phase", "ancilla"))
    joint = dist.probs
    exact_branch = _select_branch(joint, enc, branch)
    branch_prob = float(exact_branch.sum())
    if enc.kind == "lcu" and branch_prob <= POSTSELECTION_TOL:
        raise PostselectionError("B|psi0> vanishes; postselection on |0...0> is impossible")
    if shots is not None:
        counts = sample(dist, shots, seed)
        prob = _select_branch(counts / float(shots), enc, branch)
    else:
        prob = exact_branch
    n_norm = normalization_factor(enc)
    return SpectrumResult(
        n_q=n_q,
        T=evolution.T,
        omegas=frequency_grid(n_q, evolution.T),
        prob=np.asarray(prob, dtype=float),
        sbar=np.asarray(prob, dtype=float) / n_norm,
        input_kind=input_kind,
        normalization=n_norm,
        provenance=provenance,
        evolution=evolution.describe(),
        encoding=enc.describe(),
        branch=branch,
        energy_sign=-1 if branch == "hole" else 1,
        seed=seed,
        shots=shots,
        metadata={"branch_probability": branch_prob, **extra},
    )


def _initial_state(psi0: np.ndarray, enc: BEncoding, n_q: int, n_s: int) -> Statevector:
    layout = RegisterLayout(n_q, n_s, enc.n_ancilla)
    return Statevector.from_system(layout, psi0)


def run_circuit(
    psi0: np.ndarray,
    enc: BEncoding,
    evolution: Evolution,
    n_q: int,
    input_kind: str,
    branch: str | None = None,
    shots: int | None = None,
    seed: int | None = None,
    method: str = "fused",
    qft_method: str = "fft",
) -> SpectrumResult:
    """Simulate the full phase-estimation response circuit.

    Args:
        psi0: Normalized system state (typically the ground state).
        enc: Encoding of the response operator.
        evolution: Trotter plan or exact evolution; carries ``T`` and ``E0``.
        n_q: Phase-register width.
        input_kind: ``"uniform"`` or ``"sin"``.
        branch: JW encodings accept ``"hole"`` (default), ``"particle"`` or
            ``"all"``; LCU encodings always postselect the ancillas on zero.
        shots: Finite-shot sampling of the joint readout; ``None`` is exact.
        seed: RNG seed for sampling.
        method: ``"fused"`` or ``"gates"`` application of the evolution.
        qft_method: ``"fft"`` or ``"gates"`` inverse QFT.
    """
    branch = _default_branch(enc, branch)
    state = _initial_state(psi0, enc, n_q, evolution.n_qubits)
    prepare_input(state, input_kind)
    apply_vb(state, enc)
    apply_ladder(state, evolution, method)
    return _finish(state, enc, evolution, n_q, input_kind, branch, "circuit", shots, seed, qft_method, {})


def run_appendix_circuit(
    psi0: np.ndarray,
    enc: BEncoding,
    evolution: Evolution,
    n_q: int,
    input_kind: str,
    branch: str | None = None,
    shots: int | None = None,
    seed: int | None = None,
    method: str = "fused",
    qft_method: str = "fft",
) -> SpectrumResult:
    """``|j>|psi0> -> U'^j B U'^(N-1-j) |j>|psi0>`` with uncontrolled ``U' = exp(iHT)``.

    ``V_B`` is applied once per phase-register value ``j`` (``N`` multiply
    controlled insertions); ``evolution.e0`` is never used.
    """
    branch = _default_branch(enc, branch)
    n = 1 << n_q
    state = _initial_state(psi0, enc, n_q, evolution.n_qubits)
    prepare_input(state, input_kind)
    vb_count = 0
    for t in range(n):
        apply_vb(state, enc, branches=np.array([n - 1 - t]))
        vb_count += 1
        if t < n - 1:
            apply_evolution(state, evolution, 1, (), method)
    return _finish(
        state, enc, evolution, n_q, input_kind, branch, "appendix_circuit", shots, seed, qft_method,
        {"vb_applications": vb_count},
    )


def circuit_oracle(
    h: PauliSum,
    psi0: np.ndarray,
    enc: BEncoding,
    evolution: Evolution,
    n_q: int,
    input_kind: str,
    branch: str | None = None,
) -> SpectrumResult:
    """Kernel-oracle counterpart of ``run_circuit`` over the same evolution."""
    branch = _default_branch(enc, branch)
    if branch == "all":
        parts = [circuit_oracle(h, psi0, enc, evolution, n_q, input_kind, b) for b in ("hole", "particle")]
        out = parts[0]
        out.prob = parts[0].prob + parts[1].prob
        out.sbar = parts[0].sbar + parts[1].sbar
        out.branch, out.energy_sign = "all", 1
        return out
    op = enc.operator(branch if enc.kind == "jw_mode" else None)
    lines = exact_lines(h, psi0, op, evolution=evolution, energy_sign=-1 if branch == "hole" else 1)
    res = convolve(lines, n_q, evolution.T, input_kind, normalization_factor(enc), branch)
    res.evolution = evolution.describe()
    res.encoding = enc.describe()
    return res
