"""Peak estimators, peak finding and the leakage metric F(r)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks as _scipy_find_peaks

from .errors import ValidationError
from .spectral import TWO_PI, LineSpectrum, SpectrumResult, kernel

DEFAULT_R = 3
DEFAULT_WINDOW = 3
DEFAULT_PROMINENCE = 1e-2
THETA_SAMPLES = 4096


@dataclass(frozen=True)
class PeakEstimate:
    delta_e_est: float
    weight_est: float
    r: int
    indices: tuple[int, ...]
    seed: int
    halfwidth: int
    window_overlap: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["indices"] = list(self.indices)
        return d


def _window_indices(seed: int, halfwidth: int, n: int) -> list[tuple[int, int]]:
    """``(offset, index)`` pairs of the circular window, nearest offsets first."""
    out, seen = [], set()
    for d in sorted(range(-halfwidth, halfwidth + 1), key=lambda d: (abs(d), d)):
        k = (seed + d) % n
        if k not in seen:
            seen.add(k)
            out.append((d, k))
    return out


def estimate_peak(
    spectrum: SpectrumResult,
    seed: int,
    r: int = DEFAULT_R,
    halfwidth: int = DEFAULT_WINDOW,
) -> PeakEstimate:
    """r-point estimate of one transition energy and its weight.

    The ``r`` most probable grid points in the circular window
    ``[seed - halfwidth, seed + halfwidth]`` are summed: the energy is their
    probability-weighted mean frequency (unwrapped around ``seed``), the weight
    is their summed probability divided by the encoding normalization.
    Ties go to the lower grid index.
    """
    n = spectrum.n_grid
    if r < 1:
        raise ValidationError("r must be at least 1")
    if not 0 <= seed < n:
        raise ValidationError(f"seed {seed} outside the {n}-point grid")
    window = _window_indices(seed, halfwidth, n)
    if len(window) < r:
        raise ValidationError(f"window of {len(window)} points cannot host r={r}")
    p = np.asarray(spectrum.prob, dtype=float)
    chosen = sorted(window, key=lambda dk: (-p[dk[1]], dk[1]))[:r]
    mass = float(sum(p[k] for _, k in chosen))
    if mass <= 0.0:
        raise ValidationError(f"no probability inside the window around k={seed}")
    omega = sum((seed + d) * spectrum.spacing * p[k] for d, k in chosen) / mass
    return PeakEstimate(
        delta_e_est=float(spectrum.energy_sign * omega),
        weight_est=mass / spectrum.normalization,
        r=r,
        indices=tuple(k for _, k in chosen),
        seed=seed,
        halfwidth=halfwidth,
    )


def find_peaks(
    spectrum: SpectrumResult | np.ndarray,
    min_prominence: float = DEFAULT_PROMINENCE,
    circular: bool = True,
) -> list[int]:
    """Local maxima of ``sbar`` with at least ``min_prominence``, highest first.

    With ``circular=True`` the grid wraps around, so a peak at ``k = 0`` (a
    zero-energy transition) is found from its tail at ``k = N - 1``.
    """
    y = np.asarray(spectrum.sbar if isinstance(spectrum, SpectrumResult) else spectrum, dtype=float)
    n = y.size
    if n < 3:
        return []
    if circular:
        shift = int(np.argmin(y))
        rolled = np.roll(y, -shift)
        padded = np.append(rolled, rolled[0])
        idx, _ = _scipy_find_peaks(padded, prominence=min_prominence)
        peaks = [int((i + shift) % n) for i in idx if i < n]
    else:
        idx, _ = _scipy_find_peaks(y, prominence=min_prominence)
        peaks = [int(i) for i in idx]
    return sorted(set(peaks), key=lambda k: (-y[k], k))


def estimate_peaks(
    spectrum: SpectrumResult,
    r: int = DEFAULT_R,
    halfwidth: int = DEFAULT_WINDOW,
    min_prominence: float = DEFAULT_PROMINENCE,
    seeds: list[int] | None = None,
) -> list[PeakEstimate]:
    """Estimate every detected peak; overlapping windows are flagged."""
    if seeds is None:
        seeds = find_peaks(spectrum, min_prominence)
    n = spectrum.n_grid
    out = []
    for s in seeds:
        est = estimate_peak(spectrum, s, r, halfwidth)
        overlap = any(
            o != s and min((o - s) % n, (s - o) % n) <= 2 * halfwidth for o in seeds
        )
        out.append(PeakEstimate(**{**asdict(est), "indices": est.indices, "window_overlap": overlap}))
    return out


@dataclass(frozen=True)
class PeakComparison:
    estimate: PeakEstimate
    delta_e_exact: float | None
    weight_exact: float | None
    merged_lines: int = 0

    @property
    def relative_error_pct(self) -> float | None:
        if not self.weight_exact:
            return None
        return 100.0 * abs(self.estimate.weight_est - self.weight_exact) / self.weight_exact

    def to_dict(self) -> dict:
        return {
            **self.estimate.to_dict(),
            "delta_e_exact": self.delta_e_exact,
            "weight_exact": self.weight_exact,
            "relative_error_pct": self.relative_error_pct,
            "merged_lines": self.merged_lines,
        }


def compare_to_lines(
    estimates: list[PeakEstimate],
    lines: LineSpectrum,
    spectrum: SpectrumResult,
    significance: float = 1e-3,
) -> list[PeakComparison]:
    """Pair each estimate with the strongest exact line inside its window.

    Lines are located on the grid through ``dE T N / 2 pi`` modulo ``N``, so
    aliased transitions land where the circuit reports them. ``merged_lines``
    counts further lines in the window above ``significance`` times the chosen
    weight.
    """
    n = spectrum.n_grid
    pos = np.remainder(np.asarray(lines.delta_e) * spectrum.T * n / TWO_PI, n)
    w = np.asarray(lines.weights)
    out = []
    for est in estimates:
        dist = np.abs(np.remainder(pos - est.seed + n / 2, n) - n / 2)
        inside = np.nonzero(dist <= est.halfwidth + 0.5)[0]
        if inside.size == 0:
            out.append(PeakComparison(est, None, None))
            continue
        best = inside[np.argmax(w[inside])]
        merged = int(np.sum(w[inside] > significance * w[best])) - 1
        out.append(PeakComparison(est, float(lines.energy_sign * lines.delta_e[best]), float(w[best]), merged))
    return out


def format_table(comparisons: list[PeakComparison]) -> str:
    header = f"{'k*':>5} {'dE exact':>10} {'dE est':>10} {'w exact':>10} {'w est':>10} {'rel.err %':>10}"
    rows = [header, "-" * len(header)]

    def fmt(x, spec="10.4f"):
        return f"{x:{spec}}" if x is not None else f"{'-':>10}"

    for c in comparisons:
        e = c.estimate
        rows.append(
            f"{e.seed:>5d} {fmt(c.delta_e_exact)} {fmt(e.delta_e_est)} "
            f"{fmt(c.weight_exact)} {fmt(e.weight_est)} {fmt(c.relative_error_pct, '10.3f')}"
        )
    return "\n".join(rows)


@dataclass(frozen=True)
class LeakageReport:
    r: int
    n_q: int
    input_kind: str
    f_value: float
    argmax_theta: float

    def to_dict(self) -> dict:
        return asdict(self)


def _tail_outside_top_r(theta: np.ndarray, r: int, n_q: int, input_kind: str) -> np.ndarray:
    n = 1 << n_q
    p = kernel(np.arange(n)[None, :], np.atleast_1d(theta)[:, None], n_q, input_kind)
    top = -np.partition(-p, r - 1, axis=1)[:, :r]
    return 1.0 - top.sum(axis=1)


def leakage_f(
    r: int,
    n_q: int,
    input_kind: str,
    theta_samples: int = THETA_SAMPLES,
    refine: bool = True,
) -> LeakageReport:
    """Worst-case probability outside the ``r`` most likely outcomes.

    The kernel is translation covariant on the grid, so ``theta`` is scanned
    over one cell ``[0, 2 pi / N)`` and the best sample is polished by a
    bounded scalar maximization within one sample spacing.
    """
    if theta_samples < 1000:
        raise ValidationError("theta_samples must be at least 1000")
    if r < 1:
        raise ValidationError("r must be at least 1")
    n = 1 << n_q
    if r >= n:
        return LeakageReport(r, n_q, input_kind, 0.0, 0.0)
    cell = TWO_PI / n
    theta = cell * np.arange(theta_samples) / theta_samples
    chunk = max(1, (1 << 22) // n)
    f = np.concatenate(
        [_tail_outside_top_r(theta[i : i + chunk], r, n_q, input_kind) for i in range(0, theta_samples, chunk)]
    )
    i = int(np.argmax(f))
    best_theta, best_f = float(theta[i]), float(f[i])
    if refine:
        step = cell / theta_samples
        res = minimize_scalar(
            lambda t: -_tail_outside_top_r(np.array([t]), r, n_q, input_kind)[0],
            bounds=(best_theta - step, best_theta + step),
            method="bounded",
            options={"xatol": 1e-14},
        )
        if -res.fun > best_f:
            best_theta, best_f = float(res.x), float(-res.fun)
    return LeakageReport(r, n_q, input_kind, float(np.clip(best_f, 0.0, 1.0)), float(best_theta % cell))


def phase_mse(theta, n_q: int, input_kind: str) -> np.ndarray:
    """Mean squared circular distance between the readout phase and ``theta``."""
    n = 1 << n_q
    phases = TWO_PI * np.arange(n) / n
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = np.remainder(phases[None, :] - theta[:, None] + np.pi, TWO_PI) - np.pi
    p = kernel(np.arange(n)[None, :], theta[:, None], n_q, input_kind)
    return np.sum(p * d * d, axis=1)


def worst_case_mse(n_q: int, input_kind: str, theta_samples: int = 257) -> float:
    """Largest ``phase_mse`` over one grid cell (endpoints included)."""
    cell = TWO_PI / (1 << n_q)
    return float(np.max(phase_mse(cell * np.linspace(0.0, 1.0, theta_samples), n_q, input_kind)))
