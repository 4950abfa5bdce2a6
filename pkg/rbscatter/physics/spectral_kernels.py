"""Dispersion quantities and the per-mode Green functions.

Conventions: ``ω² = (1 - |β|)² - μ²`` with ``μ = εν``; mode ``m`` of the
quasiperiodic field carries the transverse factor ``e^{i(β+m)y}``. Mode 0 is
the single propagating mode and mode ``-sign(β)`` sits just below its cut-off,
its wavenumber being ``μ`` itself. All other modes are evanescent.

Complex ``ν`` (resonance search) is handled by analytic continuation with the
principal square root.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from rbscatter.core.errors import ParameterDomainError

EPSILON_MAX = 0.1
# G_r(x) switches to its Taylor series when |μx| drops below this
REGULARIZED_SERIES_RADIUS = 1e-2
_SERIES_TERMS = 6

Kernel = Callable[[np.ndarray], np.ndarray]


def _check_beta(beta: float) -> None:
    if not (math.isfinite(beta) and 0.0 < abs(beta) < 0.5):
        raise ParameterDomainError(
            "quasimomentum must satisfy 0 < |beta| < 1/2",
            details={"beta": beta},
        )


def threshold_mode(beta: float) -> int:
    """Index of the mode whose cut-off lies just above the frequency."""

    return -1 if beta > 0 else 1


def gamma_of(mu: complex, beta: float) -> complex:
    _check_beta(beta)
    return ((1.0 - abs(beta)) ** 2 - mu * mu) / (4.0 * math.pi)


def wavenumber(m: int, mu: complex, beta: float) -> complex:
    """Transverse decay/propagation constant ``k_m`` (principal branch)."""

    _check_beta(beta)
    if m == threshold_mode(beta):
        return complex(mu)
    if m == 0:
        radicand = complex(1.0 - 2.0 * abs(beta) - mu * mu)
        if radicand.real <= 0.0:
            raise ParameterDomainError(
                "frequency outside the single-mode scattering window",
                details={"beta": beta, "mu": str(mu), "radicand": radicand.real},
            )
        return cmath.sqrt(radicand)
    return cmath.sqrt((beta + m) ** 2 - (1.0 - abs(beta)) ** 2 + mu * mu)


@dataclass(frozen=True)
class SpectralParams:
    """Parameter point ``(ε, β, ν)`` and its derived quantities.

    ``k0_sign = -1`` marks the conjugate (incoming-wave) problem solved for
    negative ``β``; see :meth:`mirrored`.
    """

    epsilon: float
    beta: float
    nu: complex
    k0_sign: int = 1

    @classmethod
    def create(
        cls,
        epsilon: float,
        beta: float,
        nu: complex,
        *,
        epsilon_max: float = EPSILON_MAX,
    ) -> "SpectralParams":
        if not (math.isfinite(epsilon) and 0.0 <= epsilon <= epsilon_max):
            raise ParameterDomainError(
                f"epsilon must lie in [0, {epsilon_max}]",
                details={"epsilon": epsilon, "epsilon_max": epsilon_max},
            )
        _check_beta(beta)
        nu_c = complex(nu)
        if not (math.isfinite(nu_c.real) and math.isfinite(nu_c.imag)):
            raise ParameterDomainError("nu must be finite", details={"nu": str(nu)})
        if nu_c.real <= 0.0:
            raise ParameterDomainError(
                "nu must have a positive real part",
                details={"nu": str(nu)},
            )
        params = cls(epsilon=float(epsilon), beta=float(beta), nu=nu_c if nu_c.imag else nu_c.real)
        if (1.0 - 2.0 * abs(beta) - params.mu * params.mu).real <= 0.0:
            raise ParameterDomainError(
                "mu = epsilon*nu leaves the scattering window (1 - 2|beta| - mu^2 must be positive)",
                details={"epsilon": epsilon, "beta": beta, "nu": str(nu)},
            )
        return params

    @property
    def mu(self) -> complex:
        return self.epsilon * self.nu

    @property
    def is_real(self) -> bool:
        return complex(self.nu).imag == 0.0

    @property
    def omega_sq(self) -> complex:
        return (1.0 - abs(self.beta)) ** 2 - self.mu * self.mu

    @property
    def gamma(self) -> complex:
        return self.omega_sq / (4.0 * math.pi)

    @property
    def gamma0(self) -> float:
        """γ at μ = 0."""

        return (1.0 - abs(self.beta)) ** 2 / (4.0 * math.pi)

    @property
    def k0(self) -> complex:
        return wavenumber(0, self.mu, self.beta)

    @property
    def signed_k0(self) -> complex:
        return self.k0_sign * self.k0

    @property
    def kappa(self) -> float:
        return math.sqrt(1.0 - 2.0 * abs(self.beta))

    @property
    def threshold_mode(self) -> int:
        return threshold_mode(self.beta)

    def wavenumber(self, m: int) -> complex:
        return wavenumber(m, self.mu, self.beta)

    def with_nu(self, nu: complex) -> "SpectralParams":
        return replace(self, nu=nu)

    def with_beta(self, beta: float) -> "SpectralParams":
        return replace(self, beta=beta)

    def mirrored(self) -> "SpectralParams":
        """The ``β -> -β`` point with ``k₀ -> -k₀``; its conjugate solves this one."""

        return replace(self, beta=-self.beta, k0_sign=-self.k0_sign)

    def canonical(self) -> "SpectralParams":
        return self if self.beta > 0 else self.mirrored()

    def describe(self) -> dict[str, object]:
        return {"epsilon": self.epsilon, "beta": self.beta, "nu": self.nu}


def _regularized(mu: complex, distance: np.ndarray) -> np.ndarray:
    """G_r = (e^{-μ|x|} - 1)/(2μ), continuous at μ = 0 where it equals -|x|/2."""

    z = mu * distance
    out = np.empty(distance.shape, dtype=complex)
    small = np.abs(z) < REGULARIZED_SERIES_RADIUS
    if np.any(small):
        zs = z[small]
        acc = np.zeros(zs.shape, dtype=complex)
        term = np.ones(zs.shape, dtype=complex)
        for k in range(1, _SERIES_TERMS + 1):
            acc += ((-1) ** k / math.factorial(k)) * term
            term = term * zs
        out[small] = 0.5 * distance[small] * acc
    if not np.all(small):
        big = ~small
        out[big] = (np.exp(-z[big]) - 1.0) / (2.0 * mu)
    return out


def green_kernel(m: int, x, params: SpectralParams) -> np.ndarray:
    """``H_m(x)``: outgoing for mode 0, regularized at threshold, decaying otherwise."""

    distance = np.abs(np.asarray(x, dtype=float))
    if m == params.threshold_mode:
        return _regularized(params.mu, distance)
    if m == 0:
        k = params.signed_k0
        return 1j * np.exp(1j * k * distance) / (2.0 * k)
    k = params.wavenumber(m)
    return np.exp(-k * distance) / (2.0 * k)


def green_full(m: int, x, params: SpectralParams) -> np.ndarray:
    """Unregularized kernel; for the threshold mode ``e^{-μ|x|}/(2μ)`` (needs ``μ ≠ 0``)."""

    if m == params.threshold_mode:
        if params.mu == 0:
            raise ParameterDomainError("unregularized threshold kernel requires mu != 0")
        return green_kernel(m, x, params) + 1.0 / (2.0 * params.mu)
    return green_kernel(m, x, params)


def kernel_for(m: int, params: SpectralParams) -> Kernel:
    """Bind ``green_kernel`` to a mode for the quadrature integrators."""

    def kernel(displacement: np.ndarray) -> np.ndarray:
        return green_kernel(m, displacement, params)

    return kernel


__all__ = [
    "EPSILON_MAX",
    "Kernel",
    "SpectralParams",
    "gamma_of",
    "green_full",
    "green_kernel",
    "kernel_for",
    "threshold_mode",
    "wavenumber",
]
