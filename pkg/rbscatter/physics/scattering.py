"""Scattering of the propagating mode incident from the left.

With ``Y1 = (1 - εT̂)^{-1} g1`` and ``Y2 = (1 - εT̂)^{-1} g2`` the amplitudes are

    A = 2εγ (Y1 + C/(2μ) Y2),     C/(2μ) = εγQ / (μ - εγF),

and ``R``, ``T`` follow from the far-field asymptotics of ``Ψ₀ = e^{ik₀x} + G₀ * A₀``.
Both the quadrature of ``A₀`` and the closed forms in ``F, Q, P±, R±`` are
evaluated and must agree.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from rbscatter.core.errors import NearResonanceError, ParameterDomainError, TheoryConsistencyError
from rbscatter.physics.modal_system import (
    Discretization,
    FunctionalBundle,
    ModalField,
    ModalOperator,
    ModalVector,
    functionals_from_operator,
)
from rbscatter.physics.perturbation import PerturbationProfile
from rbscatter.physics.spectral_kernels import SpectralParams

LOGGER = logging.getLogger(__name__)

GUARD_FACTOR = 1e-3
ROUTE_TOL = 1e-10
TAIL_DECAY_LENGTHS = 10.0


@dataclass(frozen=True, eq=False)
class ScatteringSolution:
    """``R``, ``T`` and the amplitudes at one physical parameter point.

    ``A`` lives in the canonical frame (see ``ModalField``); ``C`` is the
    physical ``⟨A_t⟩`` of the threshold mode ``t``.
    """

    params: SpectralParams
    R: complex
    T: complex
    A: ModalVector
    C: complex
    evaluator: ModalField = field(repr=False)
    functionals: FunctionalBundle | None = field(default=None, repr=False)
    route_gap: float = 0.0

    @property
    def unitarity_defect(self) -> float:
        return abs(abs(self.R) ** 2 + abs(self.T) ** 2 - 1.0)

    def modal_field(self, x) -> np.ndarray:
        return self.evaluator.evaluate(x)

    def evaluate(self, x, y) -> np.ndarray:
        return self.evaluator.field(x, y)

    def default_tail_length(self) -> float:
        params = self.evaluator.params
        decays = [
            params.wavenumber(int(m)).real
            for m in self.evaluator.modes
            if m not in (0, params.threshold_mode)
        ]
        return self.evaluator.profile.support_halfwidth + TAIL_DECAY_LENGTHS / min(decays)

    def tail_residual(self, length: float | None = None) -> float:
        """Departure of ``Ψ₀`` from its plane-wave asymptotics at ``x = ±L``."""

        L = self.default_tail_length() if length is None else float(length)
        k0 = self.params.k0
        psi0 = self.evaluator.evaluate(np.array([-L, L]))[self.evaluator.disc.n_modes]
        left = psi0[0] - np.exp(-1j * k0 * L) - self.R * np.exp(1j * k0 * L)
        right = psi0[1] - self.T * np.exp(1j * k0 * L)
        return float(max(abs(left), abs(right)))

    def record(self) -> dict[str, object]:
        nu = complex(self.params.nu)
        return {
            "epsilon": self.params.epsilon,
            "beta": self.params.beta,
            "nu": nu.real,
            "R_re": complex(self.R).real,
            "R_im": complex(self.R).imag,
            "T_re": complex(self.T).real,
            "T_im": complex(self.T).imag,
            "unitarity_defect": self.unitarity_defect,
        }


def _free_solution(params: SpectralParams, profile: PerturbationProfile, disc: Discretization) -> ScatteringSolution:
    grid = disc.grid(profile)
    amplitudes = ModalVector.zeros(disc.n_modes, grid)
    modal = ModalField(params, profile, disc, amplitudes, incident=True, threshold_constant=0.0)
    return ScatteringSolution(params=params, R=0j, T=1 + 0j, A=amplitudes, C=0j, evaluator=modal)


def _coefficients(canon: SpectralParams, bundle: FunctionalBundle, ratio: complex):
    """Amplitudes and both routes for ``R``, ``T`` in the canonical frame."""

    eps, gamma = canon.epsilon, canon.gamma
    amplitudes = (2.0 * eps * gamma) * (bundle.Y1 + ratio * bundle.Y2)
    k = canon.signed_k0
    x = amplitudes.grid.nodes
    R_quad = 1j / (2.0 * k) * amplitudes.average(0, np.exp(1j * k * x))
    T_quad = 1.0 + 1j / (2.0 * k) * amplitudes.average(0, np.exp(-1j * k * x))
    prefactor = 1j * eps * gamma / k
    R_closed = prefactor * (bundle.P_plus + ratio * bundle.R_plus)
    T_closed = 1.0 + prefactor * (bundle.P_minus + ratio * bundle.R_minus)
    gap = max(abs(R_quad - R_closed), abs(T_quad - T_closed))
    scale = max(1.0, abs(prefactor * ratio) * max(abs(bundle.R_plus), abs(bundle.R_minus), 1.0))
    return amplitudes, R_quad, T_quad, gap / scale


def _finish(
    params: SpectralParams,
    canon: SpectralParams,
    profile: PerturbationProfile,
    disc: Discretization,
    bundle: FunctionalBundle,
    ratio: complex,
) -> ScatteringSolution:
    amplitudes, R, T, gap = _coefficients(canon, bundle, ratio)
    if gap > ROUTE_TOL:
        raise TheoryConsistencyError(
            "quadrature and closed-form coefficients disagree",
            details={"gap": gap, "tolerance": ROUTE_TOL, "params": params.describe()},
        )
    C = amplitudes.average(canon.threshold_mode)
    modal = ModalField(params, profile, disc, amplitudes, incident=True, threshold_constant=ratio)
    if params.beta < 0:
        R, T, C = np.conj(R), np.conj(T), np.conj(C)
    return ScatteringSolution(
        params=params,
        R=complex(R),
        T=complex(T),
        A=amplitudes,
        C=complex(C),
        evaluator=modal,
        functionals=bundle,
        route_gap=gap,
    )


def _check_real_point(params: SpectralParams) -> None:
    if not params.is_real:
        raise ParameterDomainError("scattering requires real nu", details={"nu": str(params.nu)})


def solve_scattering(
    params: SpectralParams,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    guard_factor: float = GUARD_FACTOR,
) -> ScatteringSolution:
    """Solve the scattering problem; ``guard_factor = 0`` disables the resonance guard."""

    _check_real_point(params)
    if params.epsilon == 0.0:
        return _free_solution(params, profile, disc)
    canon = params.canonical()
    bundle = functionals_from_operator(ModalOperator(canon, profile, disc))
    eps, gamma, mu = canon.epsilon, canon.gamma, canon.mu
    denominator = mu - eps * gamma * bundle.F
    threshold = guard_factor * eps * abs(gamma * bundle.F)
    if denominator == 0 or abs(denominator) < threshold:
        raise NearResonanceError(
            "mu - eps*gamma*F is too close to zero for the scattering formulas",
            details={
                "denominator": abs(denominator),
                "threshold": threshold,
                "epsilon": params.epsilon,
                "beta": params.beta,
                "nu": complex(params.nu).real,
            },
        )
    ratio = eps * gamma * bundle.Q / denominator
    solution = _finish(params, canon, profile, disc, bundle, ratio)
    LOGGER.debug(
        "scatter eps=%s beta=%s nu=%s |R|^2=%.6g defect=%.2e",
        params.epsilon,
        params.beta,
        params.nu,
        abs(solution.R) ** 2,
        solution.unitarity_defect,
    )
    return solution


def scattering_with_constant(
    params: SpectralParams,
    profile: PerturbationProfile,
    disc: Discretization,
    constant: complex,
) -> ScatteringSolution:
    """Solve with a prescribed threshold-mode average ``⟨A_t⟩ = C``.

    Only meaningful where ``Q = 0``: then every ``C`` gives a solution when
    ``μ = εγF`` and ``C = 0`` is forced otherwise.
    """

    _check_real_point(params)
    if params.epsilon == 0.0:
        return _free_solution(params, profile, disc)
    canon = params.canonical()
    if constant != 0 and canon.mu == 0:
        raise ParameterDomainError("a nonzero constant needs mu != 0")
    bundle = functionals_from_operator(ModalOperator(canon, profile, disc))
    canonical_constant = np.conj(constant) if params.beta < 0 else constant
    ratio = canonical_constant / (2.0 * canon.mu) if constant != 0 else 0j
    return _finish(params, canon, profile, disc, bundle, ratio)


def evaluate_field(solution: ScatteringSolution, x, y) -> np.ndarray:
    return solution.evaluate(x, y)


def helmholtz_residual(solution: ScatteringSolution, points: int = 401) -> float:
    """Second-difference residual of the modal ODE system on ``[-R, R]``.

    The discretization is the one the solution was computed on.
    """

    return solution.evaluator.helmholtz_residual(points)


def tail_residual(solution: ScatteringSolution, length: float | None = None) -> float:
    return solution.tail_residual(length)


__all__ = [
    "GUARD_FACTOR",
    "ScatteringSolution",
    "evaluate_field",
    "helmholtz_residual",
    "scattering_with_constant",
    "solve_scattering",
    "tail_residual",
]
