"""``epespec`` command line: spectrum, estimate, leakage and plasmon-demo."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from .block_encoding import BEncoding
from .errors import EpeError, PostselectionError, ResourceError, ValidationError
from .estimation import (
    DEFAULT_PROMINENCE,
    DEFAULT_R,
    DEFAULT_WINDOW,
    PeakComparison,
    compare_to_lines,
    estimate_peaks,
    find_peaks,
    format_table,
    leakage_f,
)
from .evolution import ExactEvolution, make_plan
from .models import PlasmonConfig, build_plasmon, exact_plasmon_spectrum, load_bundle
from .pauli import PauliSum
from .spectral import LineSpectrum, SpectrumResult, circuit_oracle, exact_lines, run_appendix_circuit, run_circuit

EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_POSTSELECTION = 0, 2, 3, 4


@dataclass
class Problem:
    h: PauliSum
    e0: float
    psi0: np.ndarray
    encoding: BEncoding
    reference: LineSpectrum | None


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def manifest(args: argparse.Namespace) -> dict:
    """Config hash, library versions and seed for a reproducible rerun."""
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    # Output locations do not change results, so they stay out of the hash.
    hashed = {k: v for k, v in config.items() if k != "out"}
    blob = json.dumps(hashed, sort_keys=True, default=str).encode()
    return {
        "config": config,
        "config_hash": hashlib.sha256(blob).hexdigest(),
        "versions": {
            "epespec": _version(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "seed": getattr(args, "seed", None),
    }


def _plasmon_config(args) -> PlasmonConfig:
    return PlasmonConfig(args.epsilon, args.omega_p, args.g, args.n_b, args.boson_encoding)


def _parse_encoding(spec: str | None, n_system: int, operator: PauliSum | None) -> BEncoding:
    if spec is None or spec == "lcu":
        if operator is None:
            raise ValidationError("LCU encoding needs --operator from a bundle")
        return BEncoding.from_operator(operator)
    if spec.startswith("jw:"):
        try:
            mode = int(spec[3:])
        except ValueError as exc:
            raise ValidationError(f"bad JW mode in --encoding {spec!r}") from exc
        return BEncoding.jw(mode, n_system)
    raise ValidationError(f"--encoding must be 'lcu' or 'jw:<mode>', got {spec!r}")


def build_problem(args) -> Problem:
    if args.bundle:
        bundle = load_bundle(args.bundle)
        op = None
        if args.operator:
            if args.operator not in bundle.operators:
                raise ValidationError(f"operator {args.operator!r} not in bundle ({sorted(bundle.operators)})")
            op = bundle.operators[args.operator]
        enc = _parse_encoding(args.encoding, bundle.n_qubits, op)
        return Problem(bundle.hamiltonian, bundle.e0, bundle.ground_state, enc, None)
    if args.model != "plasmon":
        raise ValidationError(f"unknown model {args.model!r}")
    cfg = _plasmon_config(args)
    prob = build_plasmon(cfg)
    enc = _parse_encoding(args.encoding or f"jw:{prob.b_mode}", cfg.n_system, None)
    ref = exact_plasmon_spectrum(cfg, args.n_max) if enc.kind == "jw_mode" and enc.mode == prob.b_mode else None
    return Problem(prob.h, prob.e0, prob.psi0, enc, ref)


def _evolution(args, problem: Problem):
    if args.dt is None:
        return ExactEvolution(problem.h, problem.e0, args.T)
    return make_plan(problem.h, problem.e0, args.T, args.order, args.dt)


def _reference_lines(problem: Problem, branch: str) -> LineSpectrum | None:
    if problem.reference is not None and branch == "hole":
        return problem.reference
    if problem.encoding.kind == "jw_mode" and branch == "all":
        return None
    op = problem.encoding.operator(branch if problem.encoding.kind == "jw_mode" else None)
    lines = exact_lines(problem.h, problem.psi0, op, e0=problem.e0, energy_sign=-1 if branch == "hole" else 1)
    return lines


def compute_spectrum(args) -> tuple[SpectrumResult, LineSpectrum | None]:
    problem = build_problem(args)
    evo = _evolution(args, problem)
    kwargs = dict(n_q=args.nq, input_kind=args.input, branch=args.branch)
    if args.mode == "oracle":
        if args.shots is not None:
            raise ValidationError("--shots is not available in oracle mode")
        res = circuit_oracle(problem.h, problem.psi0, problem.encoding, evo, **kwargs)
    else:
        run = run_circuit if args.mode == "circuit" else run_appendix_circuit
        res = run(problem.psi0, problem.encoding, evo, shots=args.shots, seed=args.seed, **kwargs)
    return res, _reference_lines(problem, res.branch)


def _write_spectrum(res: SpectrumResult, lines: LineSpectrum | None, args) -> None:
    extra = {"manifest": manifest(args)}
    if lines is not None:
        extra["exact_lines"] = lines.to_dict()
    csv_path, json_path = res.save(args.out, extra)
    print(f"wrote {csv_path} ({res.n_grid} rows) and {json_path}")


def cmd_spectrum(args) -> int:
    res, lines = compute_spectrum(args)
    _write_spectrum(res, lines, args)
    return EXIT_OK


def _estimate(res: SpectrumResult, lines: LineSpectrum | None, args) -> list[PeakComparison]:
    if not np.any(res.sbar > 0) or not find_peaks(res, args.prominence):
        return []
    ests = estimate_peaks(res, args.r, args.window, args.prominence)
    if lines is None:
        return [PeakComparison(e, None, None) for e in ests]
    return compare_to_lines(ests, lines, res)


def _write_estimates(comps: list[PeakComparison], res: SpectrumResult, args) -> None:
    out = Path(args.out)
    payload = {"peaks": [c.to_dict() for c in comps], "spectrum": res.meta(), "manifest": manifest(args)}
    out.with_suffix(".json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    table = format_table(comps) if comps else "no peaks above prominence"
    out.with_suffix(".txt").write_text(table + "\n")
    print(table)


def cmd_estimate(args) -> int:
    if args.spectrum:
        stem = Path(args.spectrum)
        if stem.suffix in (".csv", ".json"):
            stem = stem.with_suffix("")
        res = SpectrumResult.load(stem)
        sidecar = stem.with_suffix(".json")
        meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
        lines = LineSpectrum.from_dict(meta["exact_lines"]) if "exact_lines" in meta else None
    else:
        res, lines = compute_spectrum(args)
    _write_estimates(_estimate(res, lines, args), res, args)
    return EXIT_OK


def _int_range(text: str) -> list[int]:
    """``"5..12"``, ``"4,6,8"`` or ``"7"``."""
    out: list[int] = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out or min(out) < 1:
        raise ValidationError(f"bad integer range {text!r}")
    return out


def cmd_leakage(args) -> int:
    kinds = ["uniform", "sin"] if args.input == "both" else [args.input]
    rows = []
    for kind in kinds:
        for n_q in _int_range(args.nq_range):
            for r in _int_range(args.r_range):
                rep = leakage_f(r, n_q, kind, args.theta_samples)
                rows.append([kind, n_q, r, repr(rep.f_value), repr(rep.argmax_theta)])
    out = Path(args.out).with_suffix(".csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["input_kind", "n_q", "r", "F", "argmax_theta"])
        w.writerows(rows)
    out.with_suffix(".json").write_text(json.dumps({"manifest": manifest(args)}, indent=2, sort_keys=True))
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_plasmon_demo(args) -> int:
    """Sin and uniform plasmon runs with first-peak weight errors."""
    cfg = _plasmon_config(args)
    ref = exact_plasmon_spectrum(cfg, args.n_max)
    w0 = float(ref.weights[0])
    print(f"exact first line: dE = {ref.physical_energies[0]:.4f}, weight = {w0:.4f}")
    print(f"{'n_q':>4} {'input':>8} {'dE est':>10} {'w est':>10} {'rel.err %':>10}")
    summary = []
    for n_q in _int_range(args.nq_range):
        for kind in ("sin", "uniform"):
            ns = argparse.Namespace(**{**vars(args), "nq": n_q, "input": kind})
            res, _ = compute_spectrum(ns)
            seeds = find_peaks(res, args.prominence)
            if not seeds:
                raise ValidationError(f"no peaks found at n_q={n_q}")
            first = min(seeds, key=lambda k: abs(k * res.spacing - ref.delta_e[0]))
            est = estimate_peaks(res, args.r, args.window, args.prominence, seeds=[first])[0]
            err = 100.0 * abs(est.weight_est - w0) / w0
            print(f"{n_q:>4} {kind:>8} {est.delta_e_est:>10.4f} {est.weight_est:>10.4f} {err:>10.3f}")
            summary.append({"n_q": n_q, "input_kind": kind, **est.to_dict(), "relative_error_pct": err})
            if args.out:
                ns.out = f"{args.out}_nq{n_q}_{kind}"
                _write_spectrum(res, ref, ns)
    if args.out:
        Path(f"{args.out}_summary.json").write_text(
            json.dumps({"rows": summary, "exact_lines": ref.to_dict(), "manifest": manifest(args)}, indent=2)
        )
    return EXIT_OK


def _add_problem_args(p: argparse.ArgumentParser, plasmon_defaults: bool = False) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--model", default="plasmon", choices=["plasmon"], help="builtin model")
    src.add_argument("--bundle", help="operator bundle JSON")
    p.add_argument("--operator", help="bundle operator used as B (LCU encoding)")
    p.add_argument("--encoding", help="'lcu' or 'jw:<mode>' (plasmon default jw:0, bundle default lcu)")
    p.add_argument("--branch", choices=["hole", "particle", "all", "postselected"])
    p.add_argument("--T", type=float, default=0.8, help="scaling time")
    p.add_argument("--mode", choices=["circuit", "appendix", "oracle"], default="circuit")
    p.add_argument("--order", type=int, choices=[1, 2], default=1, help="Trotter order")
    p.add_argument(
        "--dt", type=float, default=0.025 if plasmon_defaults else None,
        help="Trotter step; omit for exact evolution",
    )
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    g = p.add_argument_group("plasmon model")
    g.add_argument("--epsilon", type=float, default=-1.0)
    g.add_argument("--omega-p", type=float, default=1.0)
    g.add_argument("--g", type=float, default=0.8)
    g.add_argument("--n-b", type=int, default=5, help="boson qubits")
    g.add_argument("--boson-encoding", choices=["fock_binary", "position_grid"], default="fock_binary")
    g.add_argument("--n-max", type=int, default=8, help="exact Poisson lines kept")


def _add_estimator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r", type=int, default=DEFAULT_R)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="half-width around each seed")
    p.add_argument("--prominence", type=float, default=DEFAULT_PROMINENCE)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epespec", description="Phase-estimation response spectra.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="simulate and write a spectrum CSV + JSON")
    _add_problem_args(p)
    p.add_argument("--nq", type=int, required=True)
    p.add_argument("--input", choices=["uniform", "sin"], default="sin")
    p.add_argument("--out", default="spectrum")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("estimate", help="peak table from a spectrum file or an inline run")
    _add_problem_args(p)
    p.add_argument("--spectrum", help="stem or CSV of a saved spectrum")
    p.add_argument("--nq", type=int, default=7)
    p.add_argument("--input", choices=["uniform", "sin"], default="sin")
    _add_estimator_args(p)
    p.add_argument("--out", default="estimate")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("leakage", help="F(r) grid over n_q and r")
    p.add_argument("--input", choices=["uniform", "sin", "both"], default="both")
    p.add_argument("--nq-range", default="4..12")
    p.add_argument("--r-range", default="1..4")
    p.add_argument("--theta-samples", type=int, default=4096)
    p.add_argument("--out", default="leakage")
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("plasmon-demo", help="electron-plasmon first-peak study")
    _add_problem_args(p, plasmon_defaults=True)
    p.add_argument("--nq-range", default="6..9")
    _add_estimator_args(p)
    p.add_argument("--out", help="optional output stem")
    p.set_defaults(func=cmd_plasmon_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "shots", None) is not None and args.shots < 1:
            raise ValidationError("--shots must be positive")
        if getattr(args, "out", None):
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except PostselectionError as exc:
        return _fail(EXIT_POSTSELECTION, "postselection", exc)
    except ResourceError as exc:
        return _fail(EXIT_RESOURCE, "resource", exc)
    except (EpeError, ValueError, IndexError, OSError) as exc:
        return _fail(EXIT_VALIDATION, "validation", exc)


def _fail(code: int, kind: str, exc: Exception) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
