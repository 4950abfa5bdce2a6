"""Embedded Rayleigh-Bloch trapped modes and the scattering near them.

Candidates come from zeros of ``f̃₁(√(1 - 2β))``. The point ``(β_tr, ν_tr)``
solves ``ℓ = 0`` and ``Q = 0`` simultaneously; only the real parts are driven
to zero and the imaginary parts are checked afterwards.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from rbscatter.core.errors import (
    ParameterDomainError,
    RBScatterError,
    RootFindingError,
    SingularPointError,
    TheoryConsistencyError,
)
from rbscatter.core.serialization import format_float
from rbscatter.physics.modal_system import (
    Discretization,
    FunctionalBundle,
    ModalField,
    ModalVector,
    compute_functionals,
)
from rbscatter.physics.perturbation import (
    PerturbationProfile,
    fourier_transform,
    fourier_transform_derivative,
)
from rbscatter.physics.resonance import (
    find_total_reflection,
    find_total_transmission,
    perturbative_coeffs,
    solve_dispersion_root,
)
from rbscatter.physics.scattering import ScatteringSolution, scattering_with_constant
from rbscatter.physics.spectral_kernels import SpectralParams, gamma_of

LOGGER = logging.getLogger(__name__)

SCAN_SAMPLES = 4000
BISECTION_XTOL = 1e-12
DERIVATIVE_FLOOR = 1e-10
NEWTON_STEP = 1e-7
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 30
IMAGINARY_TOL = 1e-9
DECAY_PADDING = 20.0
DECAY_SAMPLES = 201
CURVE_BOUND_FACTOR = 10.0


def find_candidate_beta(profile: PerturbationProfile, samples: int = SCAN_SAMPLES) -> list[float]:
    """All ``β₀₀`` in ``(0, 1/2)`` with ``f̃₁(κ₀) = 0 ≠ f̃₁'(κ₀)``, ordered by increasing ``κ₀``."""

    if not profile.symmetric:
        raise ParameterDomainError("trapped-mode candidates need a symmetric profile")
    kappas = (np.arange(samples) + 0.5) / samples
    values = np.real(fourier_transform(profile, 1, kappas))

    def f1(kappa: float) -> float:
        return fourier_transform(profile, 1, kappa).real

    scale = max(float(np.max(np.abs(values))), 1e-300)
    candidates: list[float] = []
    for left, right, v_left, v_right in zip(kappas[:-1], kappas[1:], values[:-1], values[1:]):
        if v_left == 0.0 or v_left * v_right > 0.0:
            continue
        kappa0 = brentq(f1, left, right, xtol=BISECTION_XTOL)
        slope = abs(fourier_transform_derivative(profile, 1, kappa0))
        if slope < DERIVATIVE_FLOOR * scale:
            LOGGER.info("discarding double zero of f1 at kappa=%.12f", kappa0)
            continue
        candidates.append((1.0 - kappa0 * kappa0) / 2.0)
    LOGGER.info("trapped-mode candidates: %s", candidates)
    return candidates


def width_coefficient(beta00: float, profile: PerturbationProfile) -> float:
    """``α = γ₀²|f̃₁'(κ₀)|²/κ₀³``, the coefficient of ``Δ²`` in ``Im ν₀/ε``."""

    kappa0 = math.sqrt(1.0 - 2.0 * beta00)
    gamma0 = gamma_of(0.0, beta00).real
    slope = abs(fourier_transform_derivative(profile, 1, kappa0))
    return gamma0**2 * slope**2 / kappa0**3


@dataclass(frozen=True)
class TrappedPoint:
    epsilon: float
    beta_tr: float
    nu_tr: float


@dataclass(frozen=True, eq=False)
class TrappedMode:
    """Field built from ``Y = (1 - εT̂)^{-1} g2`` with no incident wave."""

    params: SpectralParams
    Y: ModalVector
    evaluator: ModalField = field(repr=False)
    decay_residual: float
    helmholtz_residual: float
    energy: float

    def modal_field(self, x) -> np.ndarray:
        return self.evaluator.evaluate(x)


@dataclass(frozen=True, eq=False)
class TrappedModeResult:
    epsilon: float
    beta_tr: float
    nu_tr: float
    omega_sq: float
    beta00: float
    kappa0: float
    alpha: float
    q: float
    mode: ModalVector = field(repr=False)
    decay_residual: float
    helmholtz_residual: float
    energy: float
    imag_ell: float
    imag_Q: float
    iterations: int
    trapped: TrappedMode | None = field(default=None, repr=False)

    def as_dict(self) -> dict[str, object]:
        return {
            "epsilon": self.epsilon,
            "beta_tr": self.beta_tr,
            "nu_tr": self.nu_tr,
            "omega_sq": self.omega_sq,
            "beta00": self.beta00,
            "kappa0": self.kappa0,
            "alpha": self.alpha,
            "q": self.q,
            "decay_residual": self.decay_residual,
            "helmholtz_residual": self.helmholtz_residual,
            "energy": self.energy,
            "imag_ell": self.imag_ell,
            "imag_Q": self.imag_Q,
            "iterations": self.iterations,
        }


def _bundle(epsilon: float, beta: float, nu: float, profile, disc) -> tuple[SpectralParams, FunctionalBundle]:
    params = SpectralParams(epsilon=epsilon, beta=beta, nu=nu)
    return params, compute_functionals(params, profile, disc)


def _system(epsilon: float, beta: float, nu: float, profile, disc) -> tuple[complex, complex]:
    params, bundle = _bundle(epsilon, beta, nu, profile, disc)
    return nu - params.gamma * bundle.F, bundle.Q


def _mode_energy(modal: ModalField, profile: PerturbationProfile, padding: float) -> float:
    """``∫ Σ_m |Ψ_m|²``: quadrature on ``[-R, R]``, exact exponential tails outside."""

    grid = modal.amplitudes.grid
    inside = modal.evaluate(grid.nodes)
    energy = float(np.dot(grid.weights, np.sum(np.abs(inside) ** 2, axis=0)))
    R = profile.support_halfwidth
    edges = modal.evaluate(np.array([-R, R]))
    for index, m in enumerate(modal.modes):
        decay = modal.physical.wavenumber(int(m)).real if m != 0 else 0.0
        edge_power = float(np.sum(np.abs(edges[index]) ** 2))
        if decay > 0.0:
            energy += edge_power / (2.0 * decay)
        else:
            energy += edge_power * padding
    return energy


def build_trapped_mode(
    point,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    padding: float = DECAY_PADDING,
) -> TrappedMode:
    """Construct ``Ψ_m = G_m * Y_m`` at ``point`` (anything with ``epsilon, beta_tr, nu_tr``)."""

    params, bundle = _bundle(point.epsilon, point.beta_tr, point.nu_tr, profile, disc)
    if params.mu == 0:
        raise ParameterDomainError("trapped mode needs mu = eps*nu != 0")
    modal = ModalField(
        params,
        profile,
        disc,
        bundle.Y2,
        incident=False,
        threshold_constant=bundle.F / (2.0 * params.mu),
    )
    R = profile.support_halfwidth
    outer = np.linspace(R, R + padding, DECAY_SAMPLES)[1:]
    samples = modal.evaluate(np.concatenate([-outer[::-1], outer]))
    decay = float(np.max(np.abs(samples[disc.n_modes])))
    return TrappedMode(
        params=params,
        Y=bundle.Y2,
        evaluator=modal,
        decay_residual=decay,
        helmholtz_residual=modal.helmholtz_residual(),
        energy=_mode_energy(modal, profile, padding),
    )


def refine_trapped_point(
    epsilon: float,
    beta00: float,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> TrappedModeResult:
    """Newton on ``(Re ℓ, Re Q) = 0`` over ``(β, ν)``, then check the imaginary parts."""

    if not 0.0 < beta00 < 0.5:
        raise ParameterDomainError("beta00 must lie in (0, 1/2)", details={"beta00": beta00})
    coeffs = perturbative_coeffs(beta00, profile)
    beta, nu = beta00, coeffs.a1
    scale_q = max(1.0, abs(fourier_transform(profile, 0, 0.0)))
    trace: list[dict[str, float]] = []
    for iteration in range(max_iter):
        ell, Q = _system(epsilon, beta, nu, profile, disc)
        trace.append({"beta": beta, "nu": nu, "re_ell": ell.real, "re_Q": Q.real})
        LOGGER.debug("trapped newton %d: beta=%.15g nu=%.15g ell=%s Q=%s", iteration, beta, nu, ell, Q)
        if abs(ell.real) < tol * max(1.0, abs(nu)) and abs(Q.real) < tol * scale_q:
            break
        h_beta = NEWTON_STEP
        h_nu = NEWTON_STEP * max(1.0, abs(nu))
        ell_b, Q_b = _system(epsilon, beta + h_beta, nu, profile, disc)
        ell_n, Q_n = _system(epsilon, beta, nu + h_nu, profile, disc)
        jacobian = np.array(
            [
                [(ell_b.real - ell.real) / h_beta, (ell_n.real - ell.real) / h_nu],
                [(Q_b.real - Q.real) / h_beta, (Q_n.real - Q.real) / h_nu],
            ]
        )
        try:
            step = np.linalg.solve(jacobian, -np.array([ell.real, Q.real]))
        except np.linalg.LinAlgError as exc:
            raise RootFindingError("singular Jacobian in trapped-mode refinement", details={"trace": trace}) from exc
        beta, nu = beta + float(step[0]), nu + float(step[1])
        if not 0.0 < beta < 0.5:
            raise RootFindingError("trapped-mode refinement left 0 < beta < 1/2", details={"trace": trace})
    else:
        raise RootFindingError(
            f"trapped-mode refinement did not converge in {max_iter} iterations",
            details={"trace": trace[-10:]},
        )
    if abs(ell.imag) >= IMAGINARY_TOL or abs(Q.imag) >= IMAGINARY_TOL:
        raise TheoryConsistencyError(
            "dispersion function or Q keeps an imaginary part at the trapped point",
            details={"imag_ell": ell.imag, "imag_Q": Q.imag, "beta": beta, "nu": nu, "tolerance": IMAGINARY_TOL},
        )
    point = TrappedPoint(epsilon=epsilon, beta_tr=beta, nu_tr=nu)
    mode = build_trapped_mode(point, profile, disc)
    LOGGER.info("trapped mode beta_tr=%.15g nu_tr=%.15g decay=%.2e", beta, nu, mode.decay_residual)
    kappa0 = math.sqrt(1.0 - 2.0 * beta00)
    return TrappedModeResult(
        epsilon=epsilon,
        beta_tr=beta,
        nu_tr=nu,
        omega_sq=float(((1.0 - beta) ** 2 - (epsilon * nu) ** 2)),
        beta00=beta00,
        kappa0=kappa0,
        alpha=width_coefficient(beta00, profile),
        q=coeffs.q,
        mode=mode.Y,
        decay_residual=mode.decay_residual,
        helmholtz_residual=mode.helmholtz_residual,
        energy=mode.energy,
        imag_ell=float(abs(ell.imag)),
        imag_Q=float(abs(Q.imag)),
        iterations=len(trace) - 1,
        trapped=mode,
    )


def conjugate_mode(result: TrappedModeResult) -> TrappedModeResult:
    """The trapped mode at ``-β_tr``: ``Ψ ↦ conj(Ψ)``."""

    source = result.trapped
    if source is None:
        raise ParameterDomainError("result carries no constructed mode")
    physical = SpectralParams(epsilon=result.epsilon, beta=-result.beta_tr, nu=result.nu_tr)
    modal = ModalField(
        physical,
        source.evaluator.profile,
        source.evaluator.disc,
        source.Y,
        incident=False,
        threshold_constant=source.evaluator.threshold_constant,
        frame=source.evaluator.params,
    )
    mirrored = replace(source, params=physical, evaluator=modal)
    return replace(result, beta_tr=-result.beta_tr, trapped=mirrored)


def export_mode_csv(mode: TrappedMode | TrappedModeResult, path: Path, x: Sequence[float]) -> Path:
    """Write ``m,x,re_psi,im_psi`` rows, mode-major."""

    trapped = mode.trapped if isinstance(mode, TrappedModeResult) else mode
    if trapped is None:
        raise ParameterDomainError("result carries no constructed mode")
    x = np.asarray(x, dtype=float)
    values = trapped.evaluator.evaluate(x)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["m", "x", "re_psi", "im_psi"])
        for index, m in enumerate(trapped.evaluator.modes):
            for xv, psi in zip(x, values[index]):
                writer.writerow([int(m), format_float(xv), format_float(psi.real), format_float(psi.imag)])
    return path


def curve_beta(
    epsilon: float,
    nu: float,
    beta00: float,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> float:
    """``β₀(ε, εν)``: the root of ``Re Q`` in ``β`` at fixed ``ν``."""

    beta = beta00
    scale_q = max(1.0, abs(fourier_transform(profile, 0, 0.0)))
    for iteration in range(max_iter):
        q_value = compute_functionals(SpectralParams(epsilon, beta, nu), profile, disc).Q.real
        if abs(q_value) < tol * scale_q:
            return beta
        shifted = compute_functionals(SpectralParams(epsilon, beta + NEWTON_STEP, nu), profile, disc).Q.real
        slope = (shifted - q_value) / NEWTON_STEP
        if slope == 0.0:
            break
        beta -= q_value / slope
        LOGGER.debug("beta0 newton %d: beta=%.15g ReQ=%.3e", iteration, beta, q_value)
        if not 0.0 < beta < 0.5:
            break
    raise RootFindingError("beta0 curve point did not converge", details={"nu": nu, "beta": beta})


def curve_beta0(
    epsilon: float,
    nus: Sequence[float],
    beta00: float,
    profile: PerturbationProfile,
    disc: Discretization,
) -> list[tuple[float, float]]:
    """Pairs ``(ν, β₀(ε, εν))`` along the curve where ``Q = 0``."""

    points = []
    beta = beta00
    for nu in nus:
        beta = curve_beta(epsilon, float(nu), beta, profile, disc)
        points.append((float(nu), beta))
    return points


@dataclass(frozen=True)
class CurveScattering:
    nu: float
    beta: float
    R: complex
    T: complex
    C_used: complex
    family_spread: float
    R_bound: float
    T_bound: float


def scattering_on_curve(
    epsilon: float,
    nu: float,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    beta00: float,
) -> CurveScattering:
    """Scattering on ``β = β₀(ε, εν)`` where the solution with ``C = 0`` exists.

    ``C_used`` is the threshold-mode average ``⟨A_t⟩`` carried by the returned
    solution. ``family_spread`` compares against ``C = 1``; ``R`` and ``T``
    must stay within ``O(ε)`` of ``0`` and ``1``.
    """

    beta = curve_beta(epsilon, nu, beta00, profile, disc)
    params = SpectralParams.create(epsilon, beta, nu)
    base: ScatteringSolution = scattering_with_constant(params, profile, disc, 0.0)
    shifted = scattering_with_constant(params, profile, disc, 1.0)
    spread = max(abs(shifted.R - base.R), abs(shifted.T - base.T))
    coeffs = perturbative_coeffs(beta00, profile)
    R_bound = CURVE_BOUND_FACTOR * epsilon * (1.0 + abs(coeffs.q))
    T_bound = CURVE_BOUND_FACTOR * epsilon * (1.0 + abs(coeffs.a1) / coeffs.kappa)
    if abs(base.R) > R_bound or abs(base.T - 1.0) > T_bound:
        raise TheoryConsistencyError(
            "scattering on the beta0 curve is not a small perturbation",
            details={"abs_R": abs(base.R), "abs_T_minus_1": abs(base.T - 1.0), "R_bound": R_bound, "T_bound": T_bound},
        )
    return CurveScattering(
        nu=float(nu),
        beta=beta,
        R=base.R,
        T=base.T,
        C_used=base.C,
        family_spread=float(spread),
        R_bound=R_bound,
        T_bound=T_bound,
    )


@dataclass(frozen=True)
class NearModeAsymptotics:
    R_asym: complex
    T_asym: complex
    R_additive: complex


def near_mode_asymptotics(
    epsilon: float,
    delta: float,
    Delta: float,
    base: TrappedModeResult,
) -> NearModeAsymptotics:
    """Leading ``R``, ``T`` at ``δ = ν - Re ν₀(ε, β)``, ``Δ = β - β₀(ε, εν)``."""

    if delta == 0.0 and Delta == 0.0:
        raise SingularPointError("the trapped-mode point itself has no scattering asymptotics")
    width = epsilon * base.alpha * Delta * Delta
    denominator = delta - 1j * width
    return NearModeAsymptotics(
        R_asym=complex(1j * epsilon * (delta * base.q + base.alpha * Delta * Delta) / denominator),
        T_asym=complex(delta / denominator),
        R_additive=complex(1j * width / denominator),
    )


def trace_loci(
    epsilon: float,
    betas: Sequence[float],
    profile: PerturbationProfile,
    disc: Discretization,
) -> list[tuple[float, float, float, float, float]]:
    """Rows ``(β, ν_a, ν_b, Re ν₀, Im ν₀)``; ``nan`` marks an absent or failed zero."""

    rows = []
    for beta in betas:
        beta = float(beta)
        nu0 = solve_dispersion_root(epsilon, beta, profile, disc)
        zeros = []
        for search in (find_total_transmission, find_total_reflection):
            try:
                outcome = search(epsilon, beta, profile, disc, verify=False)
                zeros.append(outcome.nu if outcome.found else math.nan)
            except RBScatterError as exc:
                LOGGER.warning("locus point beta=%s failed: %s", beta, exc)
                zeros.append(math.nan)
        rows.append((beta, zeros[0], zeros[1], nu0.real, nu0.imag))
    return rows


__all__ = [
    "CurveScattering",
    "NearModeAsymptotics",
    "TrappedMode",
    "TrappedModeResult",
    "TrappedPoint",
    "build_trapped_mode",
    "conjugate_mode",
    "curve_beta",
    "curve_beta0",
    "export_mode_csv",
    "find_candidate_beta",
    "near_mode_asymptotics",
    "refine_trapped_point",
    "scattering_on_curve",
    "trace_loci",
    "width_coefficient",
]
