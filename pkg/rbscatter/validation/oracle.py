"""Independent check: the truncated modal ODE system as a finite-difference BVP.

Nothing here uses Green functions or the resolvent. The system

    -Ψ_m'' + ((β+m)² - ω²) Ψ_m - ε(ω²/2π) Σ_n f_{m-n} Ψ_n = 0

is discretized by second-order central differences on ``[-L, L]`` and closed
by exact radiation/decay conditions (the modes decouple for ``|x| > R``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from rbscatter.core.errors import (
    ConfigError,
    NearResonanceError,
    ParameterDomainError,
    SingularPointError,
)
from rbscatter.physics.perturbation import PerturbationProfile, fourier_transform, mode_table
from rbscatter.physics.resonance import perturbative_coeffs
from rbscatter.physics.spectral_kernels import SpectralParams, threshold_mode

LOGGER = logging.getLogger(__name__)

MIN_MU = 1e-4
POINTS_PER_WAVELENGTH = 40
DECAY_LENGTHS = 15.0
COARSE_FLAG_TOL = 1e-3
BORN_PROXIMITY = 10.0


@dataclass(frozen=True)
class BVPConfig:
    half_length: float
    spacing: float
    n_modes: int = 8
    richardson: bool = True

    @classmethod
    def default(cls, params: SpectralParams, profile: PerturbationProfile, n_modes: int = 8) -> "BVPConfig":
        """``L = R + 15/κ``, ``h = min(2π/κ, 1)/40`` shrunk so that ``R/h`` and ``L/h`` are integers."""

        R = profile.support_halfwidth
        kappa = params.kappa
        h0 = min(2.0 * math.pi / kappa, 1.0) / POINTS_PER_WAVELENGTH
        h = R / math.ceil(R / h0 - 1e-9)
        L = h * math.ceil((R + DECAY_LENGTHS / kappa) / h - 1e-9)
        return cls(half_length=L, spacing=h, n_modes=n_modes)

    def check(self, params: SpectralParams, profile: PerturbationProfile) -> None:
        problems = []
        if not self.half_length > profile.support_halfwidth:
            problems.append({"field": "half_length", "message": "must exceed the support half-width"})
        wavelength = 2.0 * math.pi / params.kappa
        if not 0.0 < self.spacing <= wavelength / 20.0:
            problems.append({"field": "spacing", "message": "need at least 20 points per wavelength"})
        if self.n_modes < profile.mode_count + 2:
            problems.append({"field": "n_modes", "message": f"need N >= J + 2 = {profile.mode_count + 2}"})
        if problems:
            raise ConfigError("invalid oracle configuration", details={"errors": problems})

    def halved(self) -> "BVPConfig":
        return BVPConfig(self.half_length, self.spacing / 2.0, self.n_modes, self.richardson)


def _grid(bvp: BVPConfig) -> np.ndarray:
    count = int(round(2.0 * bvp.half_length / bvp.spacing))
    return -bvp.half_length + bvp.spacing * np.arange(count + 1)


def _assemble(params: SpectralParams, profile: PerturbationProfile, bvp: BVPConfig, *, forced: bool):
    """Sparse matrix and right-hand side; unknown ``(k, m)`` sits at ``k(2N+1) + m + N``."""

    x = _grid(bvp)
    h = bvp.spacing
    N = bvp.n_modes
    J = profile.mode_count
    width = 2 * N + 1
    K = x.size - 1
    omega_sq = params.omega_sq.real
    coupling = mode_table(profile, x)
    modes = np.arange(-N, N + 1)
    k0 = params.k0.real
    decay = np.array([params.wavenumber(int(m)).real if m != 0 else 0.0 for m in modes])
    if params.epsilon == 0:
        # uncoupled with zero data: any positive closure pins it to zero
        decay[modes == threshold_mode(params.beta)] = MIN_MU

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    def add(r, c, v) -> None:
        r, c, v = np.broadcast_arrays(np.asarray(r), np.asarray(c), np.asarray(v, dtype=complex))
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(v.ravel())

    interior = np.arange(1, K)
    for index, m in enumerate(modes):
        r = interior * width + index
        add(r, (interior - 1) * width + index, -1.0 / h**2)
        add(r, (interior + 1) * width + index, -1.0 / h**2)
        add(r, r, 2.0 / h**2 + (params.beta + m) ** 2 - omega_sq)
        for n in range(max(-N, m - J), min(N, m + J) + 1):
            add(r, interior * width + n + N, -params.epsilon * omega_sq / (2.0 * math.pi) * coupling[m - n + J, interior])

    rhs = np.zeros((K + 1) * width, dtype=complex)
    for index, m in enumerate(modes):
        left = [0 * width + index, 1 * width + index, 2 * width + index]
        right = [K * width + index, (K - 1) * width + index, (K - 2) * width + index]
        d_left = np.array([-3.0, 4.0, -1.0]) / (2.0 * h)
        d_right = np.array([3.0, -4.0, 1.0]) / (2.0 * h)
        if m == 0:
            # Ψ' + ik₀Ψ = 2ik₀ e^{-ik₀L} at -L;  Ψ' - ik₀Ψ = 0 at +L
            add(left[0], left, d_left + np.array([1j * k0, 0.0, 0.0]))
            add(right[0], right, d_right - np.array([1j * k0, 0.0, 0.0]))
            if forced:
                rhs[left[0]] = 2j * k0 * np.exp(-1j * k0 * bvp.half_length)
        else:
            add(left[0], left, d_left - np.array([decay[index], 0.0, 0.0]))
            add(right[0], right, d_right + np.array([decay[index], 0.0, 0.0]))
    size = (K + 1) * width
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    ).tocsc()
    return x, matrix, rhs


def _factorize(matrix):
    try:
        return splu(matrix)
    except RuntimeError as exc:
        raise SingularPointError("oracle matrix is singular", details={"reason": str(exc)}) from exc


def _check_params(params: SpectralParams) -> None:
    if not params.is_real:
        raise ParameterDomainError("the oracle needs real nu", details={"nu": str(params.nu)})
    if params.epsilon > 0 and abs(params.mu) < MIN_MU:
        raise ParameterDomainError(
            "decay closure of the threshold mode degenerates for small mu",
            details={"mu": abs(params.mu), "minimum": MIN_MU},
        )


def _solve_once(params: SpectralParams, profile: PerturbationProfile, bvp: BVPConfig) -> tuple[complex, complex]:
    x, matrix, rhs = _assemble(params, profile, bvp, forced=True)
    solution = _factorize(matrix).solve(rhs)
    width = 2 * bvp.n_modes + 1
    psi_left = solution[bvp.n_modes]
    psi_right = solution[(x.size - 1) * width + bvp.n_modes]
    k0 = params.k0.real
    L = bvp.half_length
    R = psi_left * np.exp(-1j * k0 * L) - np.exp(-2j * k0 * L)
    T = psi_right * np.exp(-1j * k0 * L)
    return complex(R), complex(T)


@dataclass(frozen=True)
class OracleResult:
    R: complex
    T: complex
    R_coarse: complex
    T_coarse: complex
    R_fine: complex | None = None
    T_fine: complex | None = None
    refinement_estimate: float = 0.0
    coarse_flag: bool = False
    config: BVPConfig | None = field(default=None, repr=False)

    @property
    def unitarity_defect(self) -> float:
        return abs(abs(self.R) ** 2 + abs(self.T) ** 2 - 1.0)


def direct_bvp_RT(
    params: SpectralParams,
    profile: PerturbationProfile,
    bvp: BVPConfig | None = None,
    *,
    richardson: bool | None = None,
) -> OracleResult:
    """``R``, ``T`` from the finite-difference BVP, Richardson-extrapolated over ``h, h/2``."""

    _check_params(params)
    bvp = BVPConfig.default(params, profile) if bvp is None else bvp
    bvp.check(params, profile)
    use_richardson = bvp.richardson if richardson is None else richardson
    R_h, T_h = _solve_once(params, profile, bvp)
    if not use_richardson:
        return OracleResult(R=R_h, T=T_h, R_coarse=R_h, T_coarse=T_h, config=bvp)
    R_f, T_f = _solve_once(params, profile, bvp.halved())
    estimate = max(abs(R_f - R_h), abs(T_f - T_h))
    flagged = estimate > COARSE_FLAG_TOL
    if flagged:
        LOGGER.warning("oracle grid looks coarse: refinement changes R/T by %.2e", estimate)
    return OracleResult(
        R=(4.0 * R_f - R_h) / 3.0,
        T=(4.0 * T_f - T_h) / 3.0,
        R_coarse=R_h,
        T_coarse=T_h,
        R_fine=R_f,
        T_fine=T_f,
        refinement_estimate=estimate,
        coarse_flag=flagged,
        config=bvp,
    )


def smallest_singular_value(
    params: SpectralParams,
    profile: PerturbationProfile,
    bvp: BVPConfig | None = None,
    *,
    iterations: int = 40,
    seed: int = 0,
) -> float:
    """``σ_min`` of the unforced BVP matrix by inverse iteration on ``AᴴA``."""

    _check_params(params)
    bvp = BVPConfig.default(params, profile) if bvp is None else bvp
    bvp.check(params, profile)
    _, matrix, _ = _assemble(params, profile, bvp, forced=False)
    lu = _factorize(matrix)
    rng = np.random.default_rng(seed)
    vector = rng.standard_normal(matrix.shape[0]) + 1j * rng.standard_normal(matrix.shape[0])
    vector /= np.linalg.norm(vector)
    growth = 0.0
    for _ in range(iterations):
        image = lu.solve(lu.solve(vector, trans="H"))
        growth = float(np.linalg.norm(image))
        if not math.isfinite(growth) or growth == 0.0:
            raise SingularPointError("inverse iteration broke down", details={"growth": growth})
        vector = image / growth
    return 1.0 / math.sqrt(growth)


@dataclass(frozen=True)
class BornResult:
    R: complex
    T: complex
    background: complex


def born_RT(params: SpectralParams, profile: PerturbationProfile) -> BornResult:
    """First-order ``R``, ``T`` with the resonant pole ``1/(ν - γf̃₀(0))`` kept."""

    if not params.is_real:
        raise ParameterDomainError("first-order coefficients need real nu")
    if params.epsilon == 0.0:
        return BornResult(R=0j, T=1 + 0j, background=0j)
    coeffs = perturbative_coeffs(abs(params.beta), profile)
    distance = abs(params.nu - coeffs.a1)
    limit = BORN_PROXIMITY * params.epsilon * coeffs.Gamma
    if distance < limit:
        raise NearResonanceError(
            "too close to the resonance for first-order coefficients",
            details={"distance": distance, "limit": limit, "a1": coeffs.a1},
        )
    canon = params.canonical()
    k = canon.signed_k0
    gamma = canon.gamma
    c = 1j * canon.epsilon * gamma / k
    ell0 = canon.nu - gamma * fourier_transform(profile, 0, 0.0)
    f_minus = fourier_transform(profile, -1, -k.real)
    background = c * fourier_transform(profile, 0, -2.0 * k.real)
    R = background + c * gamma * f_minus * fourier_transform(profile, 1, -k.real) / ell0
    T = 1.0 + c * (fourier_transform(profile, 0, 0.0) + gamma * f_minus * fourier_transform(profile, 1, k.real) / ell0)
    if params.beta < 0:
        R, T, background = np.conj(R), np.conj(T), np.conj(background)
    return BornResult(R=complex(R), T=complex(T), background=complex(background))


@dataclass(frozen=True)
class QuantityDiscrepancy:
    max_abs: float
    rms: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class DiscrepancyReport:
    quantities: dict[str, QuantityDiscrepancy]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.quantities.values())

    def as_dict(self) -> dict[str, object]:
        return {
            "passed": self.passed,
            "quantities": {
                name: {"max_abs": q.max_abs, "rms": q.rms, "tolerance": q.tolerance, "passed": q.passed}
                for name, q in sorted(self.quantities.items())
            },
        }


def compare(
    reference: Mapping[str, object],
    test: Mapping[str, object],
    tolerances: Mapping[str, float],
) -> DiscrepancyReport:
    """Element-wise complex differences per quantity named in ``tolerances``."""

    quantities: dict[str, QuantityDiscrepancy] = {}
    for name, tolerance in tolerances.items():
        ref = np.atleast_1d(np.asarray(reference[name], dtype=complex))
        got = np.atleast_1d(np.asarray(test[name], dtype=complex))
        if ref.shape != got.shape:
            raise ParameterDomainError(
                f"quantity {name!r} has mismatched shapes",
                details={"reference": list(ref.shape), "test": list(got.shape)},
            )
        diff = np.abs(ref - got)
        max_abs = float(np.max(diff)) if diff.size else 0.0
        rms = float(np.sqrt(np.mean(diff**2))) if diff.size else 0.0
        quantities[name] = QuantityDiscrepancy(
            max_abs=max_abs, rms=rms, tolerance=float(tolerance), passed=bool(max_abs <= tolerance)
        )
    return DiscrepancyReport(quantities=quantities)


__all__ = [
    "BVPConfig",
    "BornResult",
    "DiscrepancyReport",
    "OracleResult",
    "QuantityDiscrepancy",
    "born_RT",
    "compare",
    "direct_bvp_RT",
    "smallest_singular_value",
]
