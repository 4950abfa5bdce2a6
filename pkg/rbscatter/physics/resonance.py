"""Complex resonances, line shapes and the zeros of R and T.

The dispersion function is ``ℓ(ν) = ν - γ(εν, β) F(ε, εν, β)``; away from its
root the coefficients have the fractional form ``R = a/ℓ``, ``T = b/ℓ`` with

    a = c (ℓP⁺ + γQR⁺),      b = ℓ + c (ℓP⁻ + γQR⁻),      c = iεγ/k₀.

Resonance quantities are defined for ``0 < β < 1/2``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rbscatter.core.errors import (
    DegenerateResonanceError,
    ParameterDomainError,
    RootFindingError,
    TheoryConsistencyError,
)
from rbscatter.physics.modal_system import (
    Discretization,
    FunctionalBundle,
    ModalOperator,
    assemble_g2,
    compute_functionals,
)
from rbscatter.physics.perturbation import PerturbationProfile, fourier_transform
from rbscatter.physics.scattering import solve_scattering
from rbscatter.physics.spectral_kernels import EPSILON_MAX, SpectralParams, gamma_of

LOGGER = logging.getLogger(__name__)

ROOT_TOL = 1e-12
MAX_ITERATIONS = 50
MAX_HALVINGS = 8
DEGENERATE_WIDTH = 1e-12
REALITY_TOL = 1e-10
ZERO_CHECK_TOL = 1e-7
VANISHING_TRANSFORM = 1e-12


def _check_positive_beta(beta: float) -> None:
    if not (math.isfinite(beta) and 0.0 < beta < 0.5):
        raise ParameterDomainError("resonance quantities need 0 < beta < 1/2", details={"beta": beta})


def _check_epsilon(epsilon: float) -> None:
    if not (math.isfinite(epsilon) and 0.0 < epsilon <= EPSILON_MAX):
        raise ParameterDomainError(
            f"epsilon must lie in (0, {EPSILON_MAX}]", details={"epsilon": epsilon}
        )


@dataclass(frozen=True)
class PerturbativeCoefficients:
    beta: float
    kappa: float
    gamma0: float
    a1: float
    Im_a2: float
    Gamma: float
    q: float
    d_plus: complex
    d_minus: complex
    f0_at_2kappa: complex
    a2: complex | None = None

    def as_dict(self) -> dict[str, object]:
        return {
            "beta": self.beta,
            "kappa": self.kappa,
            "a1": self.a1,
            "a2": self.a2,
            "Im_a2": self.Im_a2,
            "Gamma": self.Gamma,
            "q": self.q,
            "d_plus": self.d_plus,
            "d_minus": self.d_minus,
        }


def perturbative_coeffs(
    beta: float,
    profile: PerturbationProfile,
    disc: Discretization | None = None,
) -> PerturbativeCoefficients:
    """Leading coefficients of ``ν₀(ε) = a₁ + εa₂ + O(ε²)`` and the Fano slope.

    With a discretization the full complex ``a₂ = γ₀⟨(T̂g2)_{-1}⟩`` (``μ = 0``)
    is computed as well.
    """

    _check_positive_beta(beta)
    gamma0 = float(gamma_of(0.0, beta).real)
    kappa = math.sqrt(1.0 - 2.0 * beta)
    d_plus = fourier_transform(profile, 1, kappa)
    d_minus = fourier_transform(profile, 1, -kappa)
    f0_2k = fourier_transform(profile, 0, 2.0 * kappa)
    a1 = gamma0 * fourier_transform(profile, 0, 0.0).real
    im_a2 = gamma0**2 / (2.0 * kappa) * (abs(d_minus) ** 2 + abs(d_plus) ** 2)
    width = gamma0**2 / kappa * (abs(d_plus) ** 2 + abs(d_minus) ** 2)
    q_complex = gamma0 * f0_2k / kappa
    if abs(q_complex.imag) > 1e-10 * max(1.0, abs(q_complex)):
        LOGGER.info("Fano slope has imaginary part %.3e (asymmetric profile)", q_complex.imag)
    a2 = None
    if disc is not None:
        params = SpectralParams(epsilon=0.0, beta=beta, nu=0.0)
        operator = ModalOperator(params, profile, disc)
        a2 = gamma0 * operator.apply(assemble_g2(profile, disc)).average(-1)
    return PerturbativeCoefficients(
        beta=beta,
        kappa=kappa,
        gamma0=gamma0,
        a1=float(a1),
        Im_a2=float(im_a2),
        Gamma=float(width),
        q=float(q_complex.real),
        d_plus=d_plus,
        d_minus=d_minus,
        f0_at_2kappa=f0_2k,
        a2=a2,
    )


@dataclass
class _RootTrace:
    iterations: int = 0
    steps: list[dict[str, float]] = field(default_factory=list)


def complex_secant(
    func: Callable[[complex], complex],
    x0: complex,
    x1: complex,
    *,
    tol: float = ROOT_TOL,
    max_iter: int = MAX_ITERATIONS,
    label: str = "root",
) -> tuple[complex, _RootTrace]:
    """Secant iteration in ℂ, halving the step while the residual grows."""

    trace = _RootTrace()
    f0, f1 = func(x0), func(x1)
    for iteration in range(max_iter):
        trace.iterations = iteration
        if abs(f1) < tol * max(1.0, abs(x1)):
            return x1, trace
        slope_den = f1 - f0
        if slope_den == 0:
            break
        step = -f1 * (x1 - x0) / slope_den
        x_new = x1 + step
        f_new = func(x_new)
        halvings = 0
        while abs(f_new) > abs(f1) and halvings < MAX_HALVINGS:
            step *= 0.5
            x_new = x1 + step
            f_new = func(x_new)
            halvings += 1
        trace.steps.append({"re": x_new.real, "im": x_new.imag, "residual": abs(f_new), "halvings": halvings})
        LOGGER.debug("%s iter %d: x=%s |f|=%.3e halvings=%d", label, iteration, x_new, abs(f_new), halvings)
        x0, f0, x1, f1 = x1, f1, x_new, f_new
        # stagnation at the noise floor of the functional
        if abs(step) < 1e-15 * max(1.0, abs(x1)) and abs(f1) < 1e3 * tol * max(1.0, abs(x1)):
            return x1, trace
    raise RootFindingError(
        f"{label} did not converge in {max_iter} iterations",
        details={"last": {"re": x1.real, "im": x1.imag}, "residual": abs(f1), "trace": trace.steps[-10:]},
    )


def _params(epsilon: float, beta: float, nu: complex) -> SpectralParams:
    return SpectralParams(epsilon=epsilon, beta=beta, nu=nu)


def dispersion_value(
    epsilon: float,
    beta: float,
    nu: complex,
    profile: PerturbationProfile,
    disc: Discretization,
) -> complex:
    """``ℓ(ν) = ν - γF``."""

    params = _params(epsilon, beta, nu)
    return complex(nu) - params.gamma * compute_functionals(params, profile, disc).F


@dataclass(frozen=True)
class LineShapeCoefficients:
    a: complex
    b: complex
    ell: complex

    @property
    def R(self) -> complex:
        return self.a / self.ell

    @property
    def T(self) -> complex:
        return self.b / self.ell


def _line_shape(params: SpectralParams, bundle: FunctionalBundle) -> LineShapeCoefficients:
    gamma = params.gamma
    ell = params.nu - gamma * bundle.F
    c = 1j * params.epsilon * gamma / params.k0
    a = c * (ell * bundle.P_plus + gamma * bundle.Q * bundle.R_plus)
    b = ell + c * (ell * bundle.P_minus + gamma * bundle.Q * bundle.R_minus)
    return LineShapeCoefficients(a=complex(a), b=complex(b), ell=complex(ell))


def line_shape_coefficients(
    epsilon: float,
    beta: float,
    nu: complex,
    profile: PerturbationProfile,
    disc: Discretization,
) -> LineShapeCoefficients:
    _check_positive_beta(beta)
    params = _params(epsilon, beta, nu)
    return _line_shape(params, compute_functionals(params, profile, disc))


def lagrange_ratio(
    epsilon: float,
    beta: float,
    nu: complex,
    nu0: complex,
    profile: PerturbationProfile,
    disc: Discretization,
) -> complex:
    """``ℓ(ν)/(ν - ν₀)``; equals ``1 + O(ε)`` near the root."""

    return dispersion_value(epsilon, beta, nu, profile, disc) / (complex(nu) - nu0)


def solve_dispersion_root(
    epsilon: float,
    beta: float,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    seed: complex | None = None,
    tol: float = ROOT_TOL,
    max_iter: int = MAX_ITERATIONS,
) -> complex:
    """Complex root ``ν₀`` of ``ν - γ(εν, β)F(ε, εν, β)``."""

    _check_epsilon(epsilon)
    _check_positive_beta(beta)
    coeffs = perturbative_coeffs(beta, profile, disc)
    x0 = complex(coeffs.a1) if seed is None else complex(seed)
    x1 = x0 + epsilon * (coeffs.a2 if coeffs.a2 is not None else 0.5j * coeffs.Gamma)
    if x1 == x0:
        x1 = x0 + epsilon * 1e-3
    root, trace = complex_secant(
        lambda nu: dispersion_value(epsilon, beta, nu, profile, disc),
        x0,
        x1,
        tol=tol,
        max_iter=max_iter,
        label="dispersion root",
    )
    LOGGER.info("resonance eps=%s beta=%s nu0=%s after %d iterations", epsilon, beta, root, trace.iterations)
    if root.imag < -1e-10 * max(1.0, abs(root)):
        LOGGER.warning("resonance with negative imaginary part: %s", root)
    return root


def _require_width(Gamma: float) -> None:
    if not Gamma >= DEGENERATE_WIDTH:
        raise DegenerateResonanceError(
            "resonance width vanishes; use the trapped-mode analysis",
            details={"Gamma": Gamma, "threshold": DEGENERATE_WIDTH},
        )


def breit_wigner(delta, epsilon: float, Gamma: float):
    """Symmetric Lorentzian ``(ε²Γ²/4)/(δ² + ε²Γ²/4)``."""

    _require_width(Gamma)
    half = (epsilon * Gamma / 2.0) ** 2
    return half / (np.asarray(delta) ** 2 + half)


def fano(delta, epsilon: float, Gamma: float, q: float):
    """Asymmetric profile ``ε²(δq + Γ/2)²/(δ² + ε²Γ²/4)`` with its zero at ``δ = -Γ/(2q)``."""

    _require_width(Gamma)
    delta = np.asarray(delta)
    return epsilon**2 * (delta * q + Gamma / 2.0) ** 2 / (delta**2 + (epsilon * Gamma / 2.0) ** 2)


@dataclass(frozen=True)
class ZeroSearch:
    """Outcome of a ``ν_a`` or ``ν_b`` search; ``nu`` is ``None`` when absent."""

    found: bool
    nu: float | None = None
    seed: float | None = None
    reason: str | None = None
    imag_residual: float = 0.0
    check_value: float | None = None
    iterations: int = 0

    def as_dict(self) -> dict[str, object]:
        return {
            "found": self.found,
            "nu": self.nu,
            "seed": self.seed,
            "reason": self.reason,
            "imag_residual": self.imag_residual,
            "check_value": self.check_value,
            "iterations": self.iterations,
        }


def _real_root(
    func: Callable[[complex], complex],
    seed: float,
    epsilon: float,
    label: str,
    *,
    scale: float,
) -> tuple[float, float, int]:
    x1 = seed + epsilon * max(abs(seed), 1.0) * 1e-2
    root, trace = complex_secant(func, complex(seed), complex(x1), tol=ROOT_TOL * max(scale, 1e-300), label=label)
    if abs(root.imag) > REALITY_TOL * max(1.0, abs(root)):
        raise TheoryConsistencyError(
            f"{label} is not real",
            details={"re": root.real, "im": root.imag, "tolerance": REALITY_TOL},
        )
    return root.real, abs(root.imag), trace.iterations


def find_total_transmission(
    epsilon: float,
    beta: float,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    verify: bool = True,
) -> ZeroSearch:
    """``ν_a``: the real zero of ``a`` (``R = 0``)."""

    _check_epsilon(epsilon)
    coeffs = perturbative_coeffs(beta, profile)
    f0_2k = coeffs.f0_at_2kappa
    reference = max(abs(fourier_transform(profile, 0, 0.0)), 1.0)
    if abs(f0_2k) < VANISHING_TRANSFORM * reference:
        return ZeroSearch(found=False, reason="f0(2*kappa) vanishes: R has no zero near the resonance")
    if abs(coeffs.d_plus) < VANISHING_TRANSFORM * reference:
        return ZeroSearch(found=False, reason="f1(kappa) vanishes: no isolated resonance")
    seed = coeffs.a1 - coeffs.gamma0 * (np.conj(coeffs.d_plus) * coeffs.d_minus / np.conj(f0_2k)).real
    if seed <= 0.0:
        return ZeroSearch(found=False, seed=float(seed), reason="leading-order seed lies outside nu > 0")
    if (1.0 - 2.0 * beta - (epsilon * seed) ** 2) <= 0.0:
        return ZeroSearch(found=False, seed=float(seed), reason="leading-order seed leaves the scattering window")

    def numerator(nu: complex) -> complex:
        params = _params(epsilon, beta, nu)
        bundle = compute_functionals(params, profile, disc)
        gamma = params.gamma
        return (nu - gamma * bundle.F) * bundle.P_plus + gamma * bundle.Q * bundle.R_plus

    scale = abs(coeffs.gamma0 * coeffs.d_plus * coeffs.d_minus)
    nu_a, imag, iterations = _real_root(numerator, float(seed), epsilon, "total-transmission point", scale=scale)
    check = None
    if verify:
        solution = solve_scattering(SpectralParams.create(epsilon, beta, nu_a), profile, disc, guard_factor=0.0)
        check = abs(solution.R)
        if check >= ZERO_CHECK_TOL:
            raise TheoryConsistencyError(
                "reflection does not vanish at the total-transmission point",
                details={"nu_a": nu_a, "abs_R": check, "tolerance": ZERO_CHECK_TOL},
            )
    LOGGER.info("nu_a=%.15g (|R|=%s)", nu_a, check)
    return ZeroSearch(found=True, nu=nu_a, seed=float(seed), imag_residual=imag, check_value=check, iterations=iterations)


def find_total_reflection(
    epsilon: float,
    beta: float,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    verify: bool = True,
) -> ZeroSearch:
    """``ν_b``: the real zero of ``b`` (``T = 0``)."""

    _check_epsilon(epsilon)
    coeffs = perturbative_coeffs(beta, profile)
    reference = max(abs(fourier_transform(profile, 0, 0.0)), 1.0)
    if abs(coeffs.d_plus) < VANISHING_TRANSFORM * reference:
        return ZeroSearch(found=False, reason="f1(kappa) vanishes: no isolated resonance")
    seed = coeffs.a1
    if seed <= 0.0:
        return ZeroSearch(found=False, seed=float(seed), reason="leading-order seed lies outside nu > 0")

    def numerator(nu: complex) -> complex:
        params = _params(epsilon, beta, nu)
        return _line_shape(params, compute_functionals(params, profile, disc)).b

    nu_b, imag, iterations = _real_root(numerator, float(seed), epsilon, "total-reflection point", scale=1.0)
    check = None
    if verify:
        solution = solve_scattering(SpectralParams.create(epsilon, beta, nu_b), profile, disc, guard_factor=0.0)
        check = abs(solution.T)
        if check >= ZERO_CHECK_TOL:
            raise TheoryConsistencyError(
                "transmission does not vanish at the total-reflection point",
                details={"nu_b": nu_b, "abs_T": check, "tolerance": ZERO_CHECK_TOL},
            )
    LOGGER.info("nu_b=%.15g (|T|=%s)", nu_b, check)
    return ZeroSearch(found=True, nu=nu_b, seed=float(seed), imag_residual=imag, check_value=check, iterations=iterations)


@dataclass(frozen=True)
class AsymptoticRT:
    R_asym: complex
    T_asym: complex
    z: float
    W: complex


def asymptotic_RT(
    epsilon: float,
    delta: float,
    beta: float,
    profile: PerturbationProfile,
) -> AsymptoticRT:
    """Leading behaviour at ``ν = Re ν₀ + δ`` with ``z = δ/ε`` and ``W(z) = i/(z - iΓ/2)``:

    ``R ≈ W(z) (γ₀² conj(d₊) d₋ + δ γ₀ conj(f̃₀(2κ))) / κ`` and
    ``T ≈ 1 + W(z) (γ₀² |d₊|² + δ γ₀ f̃₀(0)) / κ``, both up to ``O(ε²/δ)`` away from the centre.
    """

    _check_epsilon(epsilon)
    coeffs = perturbative_coeffs(beta, profile)
    _require_width(coeffs.Gamma)
    z = delta / epsilon
    W = 1j / (z - 0.5j * coeffs.Gamma)
    weight = coeffs.gamma0**2 / coeffs.kappa
    slope = delta * coeffs.gamma0 / coeffs.kappa
    R_asym = W * (weight * np.conj(coeffs.d_plus) * coeffs.d_minus + slope * np.conj(coeffs.f0_at_2kappa))
    T_asym = 1.0 + W * (weight * abs(coeffs.d_plus) ** 2 + slope * fourier_transform(profile, 0, 0.0))
    return AsymptoticRT(R_asym=complex(R_asym), T_asym=complex(T_asym), z=float(z), W=complex(W))


@dataclass(frozen=True)
class ResonanceData:
    epsilon: float
    beta: float
    nu0: complex
    a1: float
    a2: complex | None
    Gamma: float
    q: float
    nu_a: float | None
    nu_b: float | None
    coefficients: PerturbativeCoefficients = field(repr=False)
    transmission: ZeroSearch | None = field(default=None, repr=False)
    reflection: ZeroSearch | None = field(default=None, repr=False)

    @property
    def fano_zero_prediction(self) -> float | None:
        """``Re ν₀ - Γ/(2q)``, the zero of the Fano profile."""

        if self.q == 0.0:
            return None
        return self.nu0.real - self.Gamma / (2.0 * self.q)

    def as_dict(self) -> dict[str, object]:
        return {
            "epsilon": self.epsilon,
            "beta": self.beta,
            "nu0": self.nu0,
            "a1": self.a1,
            "a2": self.a2,
            "Gamma": self.Gamma,
            "q": self.q,
            "nu_a": self.nu_a,
            "nu_b": self.nu_b,
            "fano_zero_prediction": self.fano_zero_prediction,
            "coefficients": self.coefficients.as_dict(),
            "total_transmission": self.transmission.as_dict() if self.transmission else None,
            "total_reflection": self.reflection.as_dict() if self.reflection else None,
        }


def resonance_report(
    epsilon: float,
    beta: float,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    with_zeros: bool = True,
) -> ResonanceData:
    coeffs = perturbative_coeffs(beta, profile, disc)
    nu0 = solve_dispersion_root(epsilon, beta, profile, disc)
    transmission = reflection = None
    if with_zeros:
        transmission = find_total_transmission(epsilon, beta, profile, disc)
        reflection = find_total_reflection(epsilon, beta, profile, disc)
    return ResonanceData(
        epsilon=epsilon,
        beta=beta,
        nu0=nu0,
        a1=coeffs.a1,
        a2=coeffs.a2,
        Gamma=coeffs.Gamma,
        q=coeffs.q,
        nu_a=transmission.nu if transmission else None,
        nu_b=reflection.nu if reflection else None,
        coefficients=coeffs,
        transmission=transmission,
        reflection=reflection,
    )


__all__ = [
    "AsymptoticRT",
    "LineShapeCoefficients",
    "PerturbativeCoefficients",
    "ResonanceData",
    "ZeroSearch",
    "asymptotic_RT",
    "breit_wigner",
    "complex_secant",
    "dispersion_value",
    "fano",
    "find_total_reflection",
    "find_total_transmission",
    "lagrange_ratio",
    "line_shape_coefficients",
    "perturbative_coeffs",
    "resonance_report",
    "solve_dispersion_root",
]
