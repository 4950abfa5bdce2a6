"""rbscatterctl: scattering, resonance and trapped-mode runs from one JSON config."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from rbscatter.core.config import (
    RunConfig,
    build_discretization,
    build_profile,
    config_digest,
    effective_config,
    load_config,
    resolve_threads,
)
from rbscatter.core.errors import EXIT_CONSISTENCY, EXIT_OK, RBScatterError, RootFindingError, classify_failure
from rbscatter.core.logsetup import configure_logging
from rbscatter.core.serialization import canonical_json
from rbscatter.diagnostics.suite import run_suite
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import PerturbationProfile, check_admissibility
from rbscatter.physics.resonance import perturbative_coeffs, resonance_report
from rbscatter.physics.scattering import solve_scattering
from rbscatter.physics.spectral_kernels import SpectralParams
from rbscatter.physics.trapped_modes import (
    curve_beta0,
    export_mode_csv,
    find_candidate_beta,
    refine_trapped_point,
    trace_loci,
)
from rbscatter.runs.sweep import render_sweep_csv, run_sweep, write_sweep_csv

LOGGER = logging.getLogger("rbscatter.cli")

MODE_PADDING = 20.0
DEFAULT_MODE_CSV = "trapped_mode.csv"


def _finite(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _envelope(config: RunConfig, command: str, payload: dict[str, Any]) -> dict[str, Any]:
    return {
        "command": command,
        "result": payload,
        "effective_config": effective_config(config),
        "config_digest": config_digest(config),
    }


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _emit_json(config: RunConfig, command: str, payload: dict[str, Any], out: str | None) -> None:
    _emit(canonical_json(_envelope(config, command, payload), indent=2) + "\n", out)


def _setup(config: RunConfig) -> tuple[PerturbationProfile, Discretization]:
    profile = build_profile(config.perturbation)
    disc = build_discretization(config.discretization, profile)
    return profile, disc


def _out_path(args: argparse.Namespace, config: RunConfig) -> str | None:
    return args.out if args.out is not None else config.output.path


def _mode_csv_path(args: argparse.Namespace, config: RunConfig) -> Path:
    """Where the trapped mode is written; follows ``--out`` unless ``output.mode_csv`` is set."""

    if config.output.mode_csv is not None:
        return Path(config.output.mode_csv)
    out = _out_path(args, config)
    if out is None:
        return Path(DEFAULT_MODE_CSV)
    out_path = Path(out)
    return out_path.with_name(f"{out_path.stem}_mode.csv")


def _cmd_scatter(args: argparse.Namespace, config: RunConfig) -> int:
    profile, disc = _setup(config)
    section = config.scatter
    params = SpectralParams.create(section.epsilon, section.beta, section.nu)
    solution = solve_scattering(params, profile, disc, guard_factor=section.guard_factor)
    record = solution.record()
    record["route_gap"] = solution.route_gap
    _emit_json(config, "scatter", record, _out_path(args, config))
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    profile, disc = _setup(config)
    threads = resolve_threads(config, args.threads)
    result = run_sweep(config.sweep, profile, disc, threads=threads)
    out = _out_path(args, config)
    if out is None:
        _emit(render_sweep_csv(result.rows), None)
        return EXIT_OK
    write_sweep_csv(result, Path(out))
    LOGGER.info("sweep written to %s (%d rows, %d refused)", out, len(result.rows), result.refused)
    return EXIT_OK


def _cmd_resonance(args: argparse.Namespace, config: RunConfig) -> int:
    profile, disc = _setup(config)
    section = config.resonance
    report = resonance_report(section.epsilon, section.beta, profile, disc, with_zeros=section.with_zeros)
    payload = report.as_dict()
    payload["admissibility"] = check_admissibility(profile)
    _emit_json(config, "resonance", payload, _out_path(args, config))
    return EXIT_OK


def _first_candidate(profile: PerturbationProfile, requested: float | None) -> tuple[float, list[float]]:
    candidates = find_candidate_beta(profile)
    if requested is not None:
        return requested, candidates
    if not candidates:
        raise RootFindingError(
            "profile has no trapped-mode candidate in 0 < beta < 1/2",
            details={"profile": profile.describe()},
        )
    return candidates[0], candidates


def _cmd_trapped(args: argparse.Namespace, config: RunConfig) -> int:
    profile, disc = _setup(config)
    section = config.trapped
    beta00, candidates = _first_candidate(profile, section.beta00)
    result = refine_trapped_point(section.epsilon, beta00, profile, disc)
    payload = result.as_dict()
    payload["candidates"] = candidates
    halfwidth = section.mode_halfwidth or profile.support_halfwidth + MODE_PADDING
    x = np.linspace(-halfwidth, halfwidth, section.mode_points)
    payload["mode_csv"] = str(export_mode_csv(result, _mode_csv_path(args, config), x))
    _emit_json(config, "trapped", payload, _out_path(args, config))
    return EXIT_OK


def _cmd_loci(args: argparse.Namespace, config: RunConfig) -> int:
    profile, disc = _setup(config)
    section = config.loci
    beta00, _ = _first_candidate(profile, section.beta00)
    if section.beta is not None:
        betas = section.beta.values()
    else:
        betas = np.linspace(beta00 - section.beta_span, beta00 + section.beta_span, section.points).tolist()
    if section.nu is not None:
        nus = section.nu.values()
    else:
        a1 = perturbative_coeffs(beta00, profile).a1
        nus = np.linspace(a1 - section.nu_span, a1 + section.nu_span, section.points).tolist()
    rows = trace_loci(section.epsilon, betas, profile, disc)
    curve = curve_beta0(section.epsilon, nus, beta00, profile, disc)
    payload = {
        "beta00": beta00,
        "loci": [
            {
                "beta": beta,
                "nu_a": _finite(nu_a),
                "nu_b": _finite(nu_b),
                "re_nu0": re_nu0,
                "im_nu0": im_nu0,
            }
            for beta, nu_a, nu_b, re_nu0, im_nu0 in rows
        ],
        "beta0_curve": [{"nu": nu, "beta": beta} for nu, beta in curve],
    }
    _emit_json(config, "loci", payload, _out_path(args, config))
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace, config: RunConfig) -> int:
    profile, disc = _setup(config)
    threads = resolve_threads(config, args.threads)
    report = run_suite(config, profile, disc, threads=threads)
    _emit_json(config, "validate", report.as_dict(), _out_path(args, config))
    return EXIT_OK if report.passed else EXIT_CONSISTENCY


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "scatter": _cmd_scatter,
    "sweep": _cmd_sweep,
    "resonance": _cmd_resonance,
    "trapped": _cmd_trapped,
    "loci": _cmd_loci,
    "validate": _cmd_validate,
}


def _failure_text(command: str, failure: dict[str, Any]) -> str:
    try:
        return canonical_json({"command": command, "error": failure}, indent=2) + "\n"
    except (TypeError, ValueError):
        # non-finite or exotic values in details
        failure = {**failure, "details": {key: repr(value) for key, value in failure["details"].items()}}
        return canonical_json({"command": command, "error": failure}, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--threads", type=int, help="sweep workers (default RBSCATTER_THREADS or cpu count)")
    common.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted-path config override, repeatable",
    )
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(prog="rbscatterctl")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("scatter", parents=[common], help="R and T at one parameter point")
    subparsers.add_parser("sweep", parents=[common], help="CSV over an (epsilon, beta, nu) grid")
    subparsers.add_parser("resonance", parents=[common], help="resonance root, line-shape constants, nu_a and nu_b")
    subparsers.add_parser("trapped", parents=[common], help="refine an embedded trapped mode")
    subparsers.add_parser("loci", parents=[common], help="nu_a, nu_b, Re nu0 and beta0 curves near a trapped mode")
    subparsers.add_parser("validate", parents=[common], help="run the validation suite")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    handler = COMMANDS[args.command]
    try:
        config = load_config(args.config, args.override)
        return handler(args, config)
    except RBScatterError as exc:
        failure = classify_failure(exc)
        sys.stderr.write(_failure_text(args.command, failure))
        return int(failure["exit_code"])


if __name__ == "__main__":  # pragma: no cover - manual entry point
    raise SystemExit(main())
