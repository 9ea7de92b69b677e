"""Command-line front end and all serialized formats.

Three subcommands:

* ``check <file>``   -- decide a single measurement record and emit a report;
* ``scan <config> -o <csv>`` -- run a boundary scan and write curve rows;
* ``demo <name> -o <file>``  -- write a named example record.

Check requests and reports are JSON with full-precision floats (Python's
shortest round-trip repr), so an embedded certificate re-verifies after a
trip through disk.  Exit codes: 0 the run reached a verdict (the verdict is
in the report, not the exit code), 1 invalid input, 2 internal failure, and
3 when ``--require-entangled`` is given and the verdict is not infeasible.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import replace
from typing import Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .evm import (
    DataError,
    ModeEVM,
    ProblemData,
    QubitDensity,
    Variant,
    separability_lmi,
)
from .evm import gaussian_mode_evm
from .scan import ScanConfig, ScanResult, run_scan, scenario_from_axes
from .scenario import build_problem, separable_fixture
from .solver import SolverOptions, VerdictKind, solve_feasibility

__all__ = [
    "InputError",
    "SCHEMA_VERSION",
    "DEMO_NAMES",
    "canonical_json",
    "load_check_request",
    "check_request_dict",
    "build_check_report",
    "write_scan_csv",
    "build_demo_request",
    "main",
]

SCHEMA_VERSION = 1

CSV_HEADER = "transmission,overlap,sigma_star,verdict_at_lo,iterations,wall_ms"


class InputError(ValueError):
    """Input file or arguments rejected; message names the offending field."""


def canonical_json(obj) -> str:
    """Stable serialization: sorted keys, two-space indent, trailing newline.

    Floats keep full precision (shortest round-trip form), so parsing and
    re-serializing a document produced here is byte-identical.
    """
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _expect_number(obj, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise InputError(f"{path}: expected a number, got {type(obj).__name__}")
    val = float(obj)
    if not np.isfinite(val):
        raise InputError(f"{path}: must be finite, got {obj!r}")
    return val


def _expect_matrix3(obj, path: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != 3:
        raise InputError(f"{path}: expected 3 rows (row-major 3x3 array)")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != 3:
            raise InputError(f"{path}[{i}]: expected 3 entries")
        rows.append([_expect_number(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows)


def _solver_options_from(obj, path: str) -> SolverOptions:
    if obj is None:
        return SolverOptions()
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected an object of solver options")
    allowed = {"tol_feas", "tol_cert", "max_iters", "margin_target"}
    unknown = set(obj) - allowed
    if unknown:
        raise InputError(f"{path}: unknown option(s) {sorted(unknown)}; allowed: {sorted(allowed)}")
    kwargs = {}
    for key, val in obj.items():
        if key == "max_iters":
            if isinstance(val, bool) or not isinstance(val, int):
                raise InputError(f"{path}.max_iters: expected an integer")
            kwargs[key] = val
        else:
            kwargs[key] = _expect_number(val, f"{path}.{key}")
    try:
        return SolverOptions(**kwargs)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc


def load_check_request(path: str, kappa_override: Optional[float] = None,
                       tol_override: Optional[float] = None):
    """Parse a check request into ``(ProblemData, SolverOptions, raw_dict)``.

    Every rejection names the offending field.  ``kappa_override`` and
    ``tol_override`` implement the corresponding command-line flags.
    """
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InputError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    required = {"schema_version", "p0", "p1", "S", "eta0", "eta1", "kappa", "variant"}
    missing = required - set(doc)
    if missing:
        raise InputError(f"missing required field(s): {sorted(missing)}")
    allowed = required | {"solver", "comment"}
    unknown = set(doc) - allowed
    if unknown:
        raise InputError(f"unknown field(s): {sorted(unknown)}")

    p0 = _expect_number(doc["p0"], "p0")
    p1 = _expect_number(doc["p1"], "p1")
    s = _expect_number(doc["S"], "S")
    kappa = _expect_number(doc["kappa"], "kappa")
    if kappa_override is not None:
        kappa = kappa_override
    variant_raw = doc["variant"]
    try:
        variant = Variant(variant_raw)
    except ValueError:
        raise InputError(f"variant: expected one of "
                         f"{[v.value for v in Variant]}, got {variant_raw!r}") from None
    eta0_mat = _expect_matrix3(doc["eta0"], "eta0")
    eta1_mat = _expect_matrix3(doc["eta1"], "eta1")

    try:
        qubit = QubitDensity(p0, p1, s)
    except DataError as exc:
        raise InputError(f"p0/p1/S: {exc}") from exc
    try:
        eta0 = ModeEVM(eta0_mat)
    except DataError as exc:
        raise InputError(f"eta0: {exc}") from exc
    try:
        eta1 = ModeEVM(eta1_mat)
    except DataError as exc:
        raise InputError(f"eta1: {exc}") from exc
    try:
        data = ProblemData(qubit=qubit, eta0=eta0, eta1=eta1, kappa=kappa, variant=variant)
        data.validate()
    except DataError as exc:
        raise InputError(str(exc)) from exc

    opts = _solver_options_from(doc.get("solver"), "solver")
    if tol_override is not None:
        if tol_override <= 0:
            raise InputError(f"--tol: must be positive, got {tol_override!r}")
        opts = replace(opts, tol_feas=tol_override, tol_cert=tol_override)
    return data, opts, doc


def check_request_dict(data: ProblemData, opts: Optional[SolverOptions] = None,
                       comment: Optional[str] = None) -> dict:
    """Serialize a measurement record as a check request document."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "p0": data.qubit.p0,
        "p1": data.qubit.p1,
        "S": data.qubit.s,
        "eta0": [[float(v) for v in row] for row in data.eta0.mat],
        "eta1": [[float(v) for v in row] for row in data.eta1.mat],
        "kappa": data.kappa,
        "variant": data.variant.value,
    }
    if opts is not None:
        doc["solver"] = {
            "tol_feas": opts.tol_feas,
            "tol_cert": opts.tol_cert,
            "max_iters": opts.max_iters,
            "margin_target": opts.margin_target,
        }
    if comment is not None:
        doc["comment"] = comment
    return doc


def _sha256_of(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return "sha256:" + digest.hexdigest()


ENTANGLED_STATEMENT = ("no separable state is compatible with this measurement "
                       "record: the data certify entanglement")


def build_check_report(verdict, lmi, data: ProblemData, opts: SolverOptions,
                       input_digest: str) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "input_digest": input_digest,
        "kappa": data.kappa,
        "variant": data.variant.value,
        "verdict": verdict.kind.value,
        "margin": None,
        "parameters": None,
        "gap": None,
        "certificate": None,
        "solver": {
            "tol_feas": opts.tol_feas,
            "tol_cert": opts.tol_cert,
            "margin_target": opts.margin_target,
            "max_iters": opts.max_iters,
            "newton_steps": verdict.iterations,
        },
    }
    if verdict.kind is VerdictKind.FEASIBLE:
        report["margin"] = float(verdict.margin)
        report["parameters"] = {name: float(v)
                                for name, v in zip(lmi.param_names, verdict.x)}
    elif verdict.kind is VerdictKind.INFEASIBLE:
        cert = verdict.certificate
        report["certificate"] = {
            "matrix": [[float(v) for v in row] for row in cert.z],
            "min_eig": cert.check.min_eig,
            "max_pairing": cert.check.max_pairing,
            "objective": cert.check.objective,
            "statement": ENTANGLED_STATEMENT,
        }
    else:
        report["gap"] = float(verdict.gap)
    return report


def _scan_config_from(doc, path: str) -> ScanConfig:
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    allowed = {"transmissions", "overlaps", "sigma_lo", "sigma_hi", "bisect_tol",
               "kappa", "variant", "tied_f", "workers", "solver", "comment"}
    unknown = set(doc) - allowed
    if unknown:
        raise InputError(f"unknown field(s): {sorted(unknown)}")
    kwargs = {}
    for key in ("transmissions", "overlaps"):
        if key in doc:
            if not isinstance(doc[key], list) or not doc[key]:
                raise InputError(f"{key}: expected a nonempty array of numbers")
            kwargs[key] = tuple(_expect_number(v, f"{key}[{i}]")
                                for i, v in enumerate(doc[key]))
    for key in ("sigma_lo", "sigma_hi", "bisect_tol", "kappa"):
        if key in doc and doc[key] is not None:
            kwargs[key] = _expect_number(doc[key], key)
    if "variant" in doc:
        try:
            kwargs["variant"] = Variant(doc["variant"])
        except ValueError:
            raise InputError(f"variant: expected one of {[v.value for v in Variant]}, "
                             f"got {doc['variant']!r}") from None
    if "tied_f" in doc:
        if not isinstance(doc["tied_f"], bool):
            raise InputError("tied_f: expected a boolean")
        kwargs["tied_f"] = doc["tied_f"]
    if "workers" in doc:
        if isinstance(doc["workers"], bool) or not isinstance(doc["workers"], int):
            raise InputError("workers: expected an integer")
        kwargs["workers"] = doc["workers"]
    kwargs["solver"] = _solver_options_from(doc.get("solver"), "solver")
    try:
        return ScanConfig(**kwargs)
    except DataError as exc:
        raise InputError(str(exc)) from exc


def _format_float(value: float) -> str:
    return repr(float(value))


def write_scan_csv(result: ScanResult, fh: TextIO, include_timing: bool = True) -> None:
    """Write scan rows plus a trailing ``#`` summary block.

    All columns except ``wall_ms`` are deterministic for a given config;
    ``include_timing=False`` writes ``0.000`` there instead of measured
    wall-clock, which makes the whole file reproducible byte for byte.
    """
    fh.write(CSV_HEADER + "\n")
    for p in result.points:
        sigma = "NA" if p.sigma_star is None else _format_float(p.sigma_star)
        wall = f"{p.wall_time * 1000.0:.3f}" if include_timing else "0.000"
        fh.write(f"{_format_float(p.transmission)},{_format_float(p.overlap)},"
                 f"{sigma},{p.verdict_at_lo},{p.iterations},{wall}\n")
    s = result.summary
    ratio = "NA" if s["max_delta_over_2eta"] is None else _format_float(s["max_delta_over_2eta"])
    fh.write(f"# rows: {s['rows']}\n")
    fh.write(f"# entangled_at_sigma_lo: {s['entangled_at_sigma_lo']}\n")
    fh.write(f"# failed_rows: {s['failed_rows']}\n")
    fh.write(f"# total_solver_calls: {s['total_solver_calls']}\n")
    fh.write(f"# max_delta_over_2eta: {ratio}\n")


def _demo_product() -> dict:
    sc = scenario_from_axes(overlap=0.999, transmission=1.0, sigma_sq=1.5, kappa=2.0)
    # True product data: zero signal amplitude, identical conditionals.
    data = build_problem(replace(sc, alpha_sq=0.0, c=0.0))
    return check_request_dict(
        data, comment="factorized signals (alpha_sq = 0): expected verdict feasible")


def _demo_pure_vacuum() -> dict:
    sc = scenario_from_axes(overlap=float(np.exp(-1.0)), transmission=1.0,
                            sigma_sq=1.0, kappa=2.0)
    data = build_problem(sc)
    return check_request_dict(
        data, comment="vacuum-variance conditionals at overlap exp(-1), unit "
                      "transmission ratio: expected verdict infeasible")


def _demo_noisy_boundary() -> dict:
    sc = scenario_from_axes(overlap=0.5, transmission=0.5, sigma_sq=1.15, kappa=2.0)
    data = build_problem(sc)
    return check_request_dict(
        data, comment="noisy conditionals inside the entangled region at half "
                      "transmission ratio: expected verdict infeasible")


def _demo_separable_mixture() -> dict:
    theta0, theta1 = 0.35, 1.85
    components = [
        (0.6, (np.cos(theta0), np.sin(theta0)),
         gaussian_mode_evm(0.4, -0.2, 1.3, 1.15, 0.1)),
        (0.4, (np.cos(theta1), np.sin(theta1)),
         gaussian_mode_evm(-0.6, 0.3, 1.2, 1.4, -0.15)),
    ]
    data, _ = separable_fixture(components, kappa=2.0)
    return check_request_dict(
        data, comment="explicit two-component separable mixture: expected "
                      "verdict feasible")


def _demo_homodyne_pair() -> dict:
    sc = scenario_from_axes(overlap=0.5, transmission=0.5, sigma_sq=1.15, kappa=2.0,
                            variant=Variant.HOMODYNE)
    data = build_problem(sc)
    return check_request_dict(
        data, comment="homodyne reading of the noisy-boundary record; flip "
                      "variant to 'heterodyne' for the matched comparison run")


DEMO_NAMES = {
    "product": _demo_product,
    "pure-vacuum": _demo_pure_vacuum,
    "noisy-boundary": _demo_noisy_boundary,
    "separable-mixture": _demo_separable_mixture,
    "homodyne-pair": _demo_homodyne_pair,
}


def build_demo_request(name: str) -> dict:
    try:
        builder = DEMO_NAMES[name]
    except KeyError:
        raise InputError(f"unknown demo name {name!r}; available: "
                         f"{', '.join(sorted(DEMO_NAMES))}") from None
    return builder()


class _Parser(argparse.ArgumentParser):
    # Usage problems are invalid input (exit 1), not internal failures.
    def error(self, message):
        raise InputError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="evmsep",
                     description="Separability feasibility tests for qubit-mode "
                                 "prepare-and-measure QKD data")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="decide a single measurement record")
    p_check.add_argument("input", help="check request JSON file")
    p_check.add_argument("--require-entangled", action="store_true",
                         help="exit 3 unless the verdict is infeasible")
    p_check.add_argument("--tol", type=float, default=None, metavar="X",
                         help="override feasibility and certificate tolerances")
    p_check.add_argument("--kappa", type=float, default=None, metavar="K",
                         help="override the commutator scale from the file")
    p_check.add_argument("-o", "--output", default=None,
                         help="write the report here instead of stdout")

    p_scan = sub.add_parser("scan", help="run a boundary scan over the default "
                                         "or configured grid")
    p_scan.add_argument("config", help="scan config JSON file ('{}' for defaults)")
    p_scan.add_argument("-o", "--output", required=True, help="output CSV path")

    p_demo = sub.add_parser("demo", help="write a named example record")
    p_demo.add_argument("name", help=f"one of: {', '.join(sorted(DEMO_NAMES))}")
    p_demo.add_argument("-o", "--output", required=True, help="output JSON path")
    return parser


def _cmd_check(args) -> int:
    data, opts, _ = load_check_request(args.input, kappa_override=args.kappa,
                                       tol_override=args.tol)
    lmi = separability_lmi(data)
    verdict = solve_feasibility(lmi, opts)
    report = build_check_report(verdict, lmi, data, opts, _sha256_of(args.input))
    text = canonical_json(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.require_entangled and verdict.kind is not VerdictKind.INFEASIBLE:
        return 3
    return 0


def _cmd_scan(args) -> int:
    cfg = _scan_config_from(_load_json(args.config), args.config)
    result = run_scan(cfg)
    with open(args.output, "w", encoding="utf-8") as fh:
        write_scan_csv(result, fh)
    return 0


def _cmd_demo(args) -> int:
    doc = build_demo_request(args.name)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(doc))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "scan":
            return _cmd_scan(args)
        if args.command == "demo":
            return _cmd_demo(args)
        raise InputError(f"unknown command {args.command!r}")
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure, never a verdict
        print(f"internal failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
