"""Default validation suite run by ``rbscatterctl validate``.

Each check returns a :class:`CheckResult`; the suite passes when every
requested check does. Points refused by the resonance guard are skipped and
counted, never failed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rbscatter.core.config import RangeConfig, RunConfig, SweepConfig
from rbscatter.core.errors import NearResonanceError, ParameterDomainError, RBScatterError
from rbscatter.diagnostics.reproducibility import audit_determinism
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import PerturbationProfile
from rbscatter.physics.resonance import lagrange_ratio, line_shape_coefficients, solve_dispersion_root
from rbscatter.physics.scattering import ScatteringSolution, solve_scattering
from rbscatter.physics.spectral_kernels import SpectralParams
from rbscatter.validation.oracle import BVPConfig, compare, direct_bvp_RT

LOGGER = logging.getLogger(__name__)

LAGRANGE_MIN_ORDER = 0.6
LAGRANGE_MAX_DEVIATION = 0.1
LAGRANGE_NOISE = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float | None
    tolerance: float
    points: int
    skipped: int = 0
    details: dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "tolerance": self.tolerance,
            "points": self.points,
            "skipped": self.skipped,
            "details": self.details,
        }


@dataclass(frozen=True)
class SuiteReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def as_dict(self) -> dict[str, object]:
        return {"passed": self.passed, "checks": [check.as_dict() for check in self.checks]}


@dataclass
class _Context:
    config: RunConfig
    profile: PerturbationProfile
    disc: Discretization
    threads: int
    solutions: list[ScatteringSolution] = field(default_factory=list)
    refused: int = 0


def _solve_grid(ctx: _Context) -> None:
    section = ctx.config.validation
    for epsilon in section.epsilon:
        for beta in section.beta:
            for nu in section.nu.values():
                params = SpectralParams.create(epsilon, beta, nu)
                try:
                    ctx.solutions.append(solve_scattering(params, ctx.profile, ctx.disc))
                except NearResonanceError:
                    ctx.refused += 1


def _check_unitarity(ctx: _Context) -> CheckResult:
    tol = ctx.config.tolerances.unitarity
    worst = max((s.unitarity_defect for s in ctx.solutions), default=0.0)
    return CheckResult("unitarity", worst < tol, worst, tol, len(ctx.solutions), ctx.refused)


def _check_symmetry(ctx: _Context) -> CheckResult:
    tol = ctx.config.tolerances.symmetry
    if not ctx.profile.symmetric:
        return CheckResult("symmetry", True, 0.0, tol, 0, len(ctx.solutions), {"reason": "profile is not symmetric"})
    worst = 0.0
    counted = 0
    for solution in ctx.solutions:
        bundle = solution.functionals
        if bundle is None:
            continue
        counted += 1
        worst = max(worst, abs(bundle.Q - bundle.R_plus), abs(bundle.R_plus - bundle.R_minus))
    return CheckResult("symmetry", worst < tol, worst, tol, counted, ctx.refused)


def _check_routes(ctx: _Context) -> CheckResult:
    tol = ctx.config.tolerances.routes
    worst = max((s.route_gap for s in ctx.solutions), default=0.0)
    return CheckResult("routes", worst <= tol, worst, tol, len(ctx.solutions), ctx.refused)


def _check_oracle(ctx: _Context) -> CheckResult:
    tol = ctx.config.tolerances.oracle
    wanted = ctx.config.validation.oracle_points
    eligible = [s for s in ctx.solutions if s.params.epsilon > 0 and abs(s.params.mu) >= 1e-4]
    if wanted == 0 or not eligible:
        return CheckResult("oracle", True, 0.0, tol, 0, len(ctx.solutions), {"reason": "no eligible points"})
    picks = np.unique(np.linspace(0, len(eligible) - 1, min(wanted, len(eligible))).round().astype(int))
    chosen = [eligible[i] for i in picks]
    reference = {"R": [], "T": []}
    test = {"R": [], "T": []}
    coarse = 0
    for solution in chosen:
        bvp = BVPConfig.default(solution.params, ctx.profile, ctx.disc.n_modes)
        result = direct_bvp_RT(solution.params, ctx.profile, bvp)
        coarse += int(result.coarse_flag)
        reference["R"].append(result.R)
        reference["T"].append(result.T)
        test["R"].append(solution.R)
        test["T"].append(solution.T)
    report = compare(reference, test, {"R": tol, "T": tol})
    worst = max(q.max_abs for q in report.quantities.values())
    return CheckResult(
        "oracle", report.passed, worst, tol, len(chosen), len(ctx.solutions) - len(chosen),
        {"coarse_flags": coarse, "report": report.as_dict()},
    )


def _lagrange_deviation(epsilon: float, beta: float, ctx: _Context) -> float:
    """``|ℓ(ν)/(ν - ν₀) - 1|`` at ``ν = Re ν₀ + ε``."""

    nu0 = solve_dispersion_root(epsilon, beta, ctx.profile, ctx.disc)
    ratio = lagrange_ratio(epsilon, beta, nu0.real + epsilon, nu0, ctx.profile, ctx.disc)
    return abs(ratio - 1.0)


def _check_lagrange(ctx: _Context) -> CheckResult:
    """``R = a/ℓ`` and ``T = b/ℓ`` reproduce the solver.

    Also halves each ``ε`` and requires ``ℓ/(ν - ν₀) - 1`` to shrink at least
    linearly with it.
    """

    tol = ctx.config.tolerances.lagrange
    worst = 0.0
    counted = 0
    for solution in ctx.solutions:
        p = solution.params
        if p.beta <= 0 or p.epsilon == 0:
            continue
        shape = line_shape_coefficients(p.epsilon, p.beta, p.nu, ctx.profile, ctx.disc)
        counted += 1
        worst = max(worst, abs(shape.R - solution.R), abs(shape.T - solution.T))

    section = ctx.config.validation
    orders: list[dict[str, float]] = []
    for epsilon in section.epsilon:
        for beta in sorted({abs(b) for b in section.beta}):
            full = _lagrange_deviation(epsilon, beta, ctx)
            half = _lagrange_deviation(epsilon / 2.0, beta, ctx)
            order = math.log2(full / half) if full > LAGRANGE_NOISE and half > LAGRANGE_NOISE else math.inf
            orders.append({"epsilon": epsilon, "beta": beta, "deviation": full, "half_deviation": half, "order": order})
    ordered = all(item["order"] >= LAGRANGE_MIN_ORDER and item["deviation"] <= LAGRANGE_MAX_DEVIATION for item in orders)
    details: dict[str, object] = {
        "orders": [{key: (value if math.isfinite(value) else None) for key, value in item.items()} for item in orders]
    }
    return CheckResult(
        "lagrange", worst < tol and ordered, worst, tol, counted, len(ctx.solutions) - counted, details
    )


def _check_determinism(ctx: _Context) -> CheckResult:
    section = ctx.config.validation
    sweep = SweepConfig(
        epsilon=RangeConfig(start=section.epsilon[0], stop=section.epsilon[0]),
        beta=RangeConfig(start=section.beta[0], stop=section.beta[0]),
        nu=section.nu,
    )
    report = audit_determinism(sweep, ctx.profile, ctx.disc, threads=ctx.threads)
    return CheckResult(
        "determinism", report.consistent, 0.0 if report.consistent else 1.0, 0.0, report.rows, 0,
        {"serial": report.serial_hash.digest, "parallel": report.parallel_hash.digest},
    )


CHECKS: dict[str, Callable[[_Context], CheckResult]] = {
    "unitarity": _check_unitarity,
    "symmetry": _check_symmetry,
    "routes": _check_routes,
    "oracle": _check_oracle,
    "lagrange": _check_lagrange,
    "determinism": _check_determinism,
}


def run_suite(
    config: RunConfig,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    threads: int = 1,
) -> SuiteReport:
    ctx = _Context(config=config, profile=profile, disc=disc, threads=threads)
    _solve_grid(ctx)
    results = []
    for name in config.validation.checks:
        try:
            result = CHECKS[name](ctx)
        except (ParameterDomainError, NearResonanceError):
            raise
        except RBScatterError as exc:
            LOGGER.warning("check %s raised %s", name, exc)
            result = CheckResult(name, False, None, 0.0, 0, 0, {"error": exc.code, "message": exc.message})
        LOGGER.info("check %s: %s (%s)", name, "pass" if result.passed else "FAIL", result.value)
        results.append(result)
    return SuiteReport(checks=results)


__all__ = ["CHECKS", "CheckResult", "SuiteReport", "run_suite"]
