"""Discretized modal space, the operator T̂ and the resolvent ``(1 - εT̂)^{-1}``.

A :class:`ModalVector` stores ``A_n(x_i)`` for ``|n| <= N`` on the composite
Gauss-Legendre nodes of ``[-R, R]``. The operator

    (T̂A)_m = 2γ Σ_n f_{m-n}(x) (H_n * A_n)(x)

couples only modes with ``|m - n| <= J``, so ``1 - εT̂`` is block banded and
is factorized on its band. All routines work in the canonical frame
``β > 0``; negative ``β`` is mapped through :meth:`SpectralParams.canonical`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve, solve_banded

from rbscatter.core.errors import ConfigError, DiscretizationError
from rbscatter.physics.perturbation import PerturbationProfile, mode_table
from rbscatter.physics.quadrature import CompositeGaussLegendre, ProductIntegrator, node_integrator, uniform_grid
from rbscatter.physics.spectral_kernels import SpectralParams, kernel_for

LOGGER = logging.getLogger(__name__)

QUADRATURE_RULE = "composite-gauss-legendre"


@dataclass(frozen=True)
class Discretization:
    """Truncation ``|n| <= N`` and the x-grid on ``[-R, R]``."""

    n_modes: int = 8
    grid_points: int = 128
    panel_order: int = 8
    sub_order: int = 16
    quadrature: str = QUADRATURE_RULE
    padding: float | None = None
    residual_tol: float = 1e-10

    @property
    def panels(self) -> int:
        return self.grid_points // self.panel_order

    @property
    def size(self) -> int:
        return (2 * self.n_modes + 1) * self.grid_points

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)

    def check(self, profile: PerturbationProfile) -> None:
        problems: list[dict[str, object]] = []
        if self.quadrature != QUADRATURE_RULE:
            problems.append({"field": "quadrature", "message": f"unsupported rule {self.quadrature!r}"})
        if self.n_modes < profile.mode_count + 2:
            problems.append({"field": "n_modes", "message": f"need N >= J + 2 = {profile.mode_count + 2}"})
        if self.grid_points < 32:
            problems.append({"field": "grid_points", "message": "need at least 32 grid points"})
        if self.panel_order < 2 or self.grid_points % self.panel_order:
            problems.append({"field": "grid_points", "message": "must be a multiple of panel_order"})
        if self.sub_order < self.panel_order:
            problems.append({"field": "sub_order", "message": "sub_order must be >= panel_order"})
        if self.padding is not None and self.padding <= 0:
            problems.append({"field": "padding", "message": "padding must be positive"})
        if not self.residual_tol > 0:
            problems.append({"field": "residual_tol", "message": "must be positive"})
        if problems:
            raise ConfigError("invalid discretization", details={"errors": problems})

    def grid(self, profile: PerturbationProfile) -> CompositeGaussLegendre:
        return uniform_grid(profile.support_halfwidth, self.panels, self.panel_order)

    def refined(self, *, grid_factor: int = 2, extra_modes: int = 0) -> "Discretization":
        return Discretization(
            n_modes=self.n_modes + extra_modes,
            grid_points=self.grid_points * grid_factor,
            panel_order=self.panel_order,
            sub_order=self.sub_order,
            quadrature=self.quadrature,
            padding=self.padding,
            residual_tol=self.residual_tol,
        )


@dataclass(frozen=True, eq=False)
class ModalVector:
    """Element of the modal space; row ``n + N`` holds ``A_n`` on the grid."""

    values: np.ndarray
    grid: CompositeGaussLegendre

    @classmethod
    def zeros(cls, n_modes: int, grid: CompositeGaussLegendre) -> "ModalVector":
        return cls(np.zeros((2 * n_modes + 1, grid.size), dtype=complex), grid)

    @property
    def n_modes(self) -> int:
        return (self.values.shape[0] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)

    def component(self, n: int) -> np.ndarray:
        if abs(n) > self.n_modes:
            return np.zeros(self.grid.size, dtype=complex)
        return self.values[n + self.n_modes]

    def average(self, n: int, weight: np.ndarray | None = None) -> complex:
        values = self.component(n)
        return average(values if weight is None else values * weight, self.grid)

    def sup_by_mode(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)

    def norm(self) -> float:
        """``‖A‖`` with ``‖A‖² = Σ_n (sup_x |A_n|)²``."""

        return float(np.sqrt(np.sum(self.sup_by_mode() ** 2)))

    def odd_part(self) -> float:
        """sup of the odd part over all components (the grid is symmetric)."""

        return float(np.max(np.abs(self.values - self.values[:, ::-1])) / 2.0)

    def decay_exponent(self, floor: float = 1e-14) -> float:
        """Fit ``sup|A_n| ≈ C|n|^{-p}`` over ``n != 0``; returns ``p``."""

        sups = self.sup_by_mode()
        modes = self.modes
        scale = float(np.max(sups)) if sups.size else 0.0
        mask = (modes != 0) & (sups > floor * max(scale, 1e-300))
        if np.count_nonzero(mask) < 2:
            return float("inf")
        slope, _ = np.polyfit(np.log(np.abs(modes[mask])), np.log(sups[mask]), 1)
        return float(-slope)

    def _check(self, other: "ModalVector") -> None:
        same_grid = other.grid is self.grid or np.array_equal(other.grid.nodes, self.grid.nodes)
        if other.values.shape != self.values.shape or not same_grid:
            raise DiscretizationError(
                "modal vectors live on different grids",
                details={"shapes": [list(self.values.shape), list(other.values.shape)]},
            )

    def __add__(self, other: "ModalVector") -> "ModalVector":
        self._check(other)
        return ModalVector(self.values + other.values, self.grid)

    def __sub__(self, other: "ModalVector") -> "ModalVector":
        self._check(other)
        return ModalVector(self.values - other.values, self.grid)

    def __mul__(self, scalar: complex) -> "ModalVector":
        return ModalVector(self.values * scalar, self.grid)

    __rmul__ = __mul__

    def conjugate(self) -> "ModalVector":
        return ModalVector(np.conj(self.values), self.grid)


def average(values: np.ndarray, grid: CompositeGaussLegendre) -> complex:
    """``⟨h⟩ = ∫ h dx`` over ``[-R, R]``."""

    return grid.integrate(values)


def _embed_modes(profile: PerturbationProfile, disc: Discretization, grid: CompositeGaussLegendre, shift: int, phase):
    table = mode_table(profile, grid.nodes)
    J = profile.mode_count
    out = ModalVector.zeros(disc.n_modes, grid)
    for m in disc.modes:
        j = int(m) + shift
        if abs(j) <= J:
            out.values[m + disc.n_modes] = table[j + J] * phase
    return out


def assemble_g1(params: SpectralParams, profile: PerturbationProfile, disc: Discretization) -> ModalVector:
    """``(g1)_m = e^{ik₀x} f_m`` (``k₀`` signed in the conjugate frame)."""

    params = params.canonical()
    disc.check(profile)
    grid = disc.grid(profile)
    return _embed_modes(profile, disc, grid, 0, np.exp(1j * params.signed_k0 * grid.nodes))


def assemble_g2(profile: PerturbationProfile, disc: Discretization) -> ModalVector:
    """``(g2)_m = f_{m+1}``."""

    disc.check(profile)
    return _embed_modes(profile, disc, disc.grid(profile), 1, 1.0)


class ModalOperator:
    """``T̂`` and ``1 - εT̂`` at one parameter point.

    The kernel matrices ``W_n`` (product-integration weights of ``H_n``) and
    the mode table are built on construction; the band storage and any
    factorization are built lazily and kept for repeated solves.
    """

    def __init__(self, params: SpectralParams, profile: PerturbationProfile, disc: Discretization) -> None:
        disc.check(profile)
        self.params = params.canonical()
        self.profile = profile
        self.disc = disc
        self.grid = disc.grid(profile)
        integrator = node_integrator(profile.support_halfwidth, disc.panels, disc.panel_order, disc.sub_order)
        self.kernels = np.stack([integrator.matrix(kernel_for(int(n), self.params)) for n in disc.modes])
        self.coupling = mode_table(profile, self.grid.nodes)
        self.scale = 2.0 * self.params.gamma
        self.bandwidth = (profile.mode_count + 1) * disc.grid_points - 1

    @property
    def epsilon(self) -> float:
        return self.params.epsilon

    def _couplings(self):
        """Yield ``(m, n, f_{m-n})`` for every nonzero block."""

        N = self.disc.n_modes
        J = self.profile.mode_count
        for m in range(-N, N + 1):
            for n in range(max(-N, m - J), min(N, m + J) + 1):
                yield m, n, self.coupling[m - n + J]

    def apply(self, vector: ModalVector) -> ModalVector:
        """``T̂A``."""

        if vector.values.shape != (self.disc.n_modes * 2 + 1, self.grid.size):
            raise DiscretizationError(
                "vector does not match the operator grid",
                details={"shape": list(vector.values.shape), "n_modes": self.disc.n_modes, "grid": self.grid.size},
            )
        N = self.disc.n_modes
        J = self.profile.mode_count
        convolved = np.einsum("nij,nj->ni", self.kernels, vector.values)
        out = np.zeros_like(convolved)
        for d in range(-J, J + 1):
            lo, hi = max(-N, -N + d), min(N, N + d)
            if lo > hi:
                continue
            out[lo + N : hi + N + 1] += self.coupling[d + J] * convolved[lo - d + N : hi - d + N + 1]
        return ModalVector(self.scale * out, vector.grid)

    def residual(self, solution: ModalVector, rhs: ModalVector) -> float:
        """Relative max-norm residual of ``(1 - εT̂)Y = g``."""

        defect = solution.values - self.epsilon * self.apply(solution).values - rhs.values
        scale = max(float(np.max(np.abs(rhs.values))), 1e-300)
        return float(np.max(np.abs(defect)) / scale)

    def dense_matrix(self) -> np.ndarray:
        M = self.disc.grid_points
        matrix = np.eye(self.disc.size, dtype=complex)
        N = self.disc.n_modes
        for m, n, f in self._couplings():
            r, c = (m + N) * M, (n + N) * M
            matrix[r : r + M, c : c + M] -= self.epsilon * self.scale * f[:, None] * self.kernels[n + N]
        return matrix

    @cached_property
    def banded(self) -> np.ndarray:
        """``1 - εT̂`` in LAPACK band storage (``ab[u + i - j, j] = A[i, j]``)."""

        M = self.disc.grid_points
        N = self.disc.n_modes
        u = self.bandwidth
        ab = np.zeros((2 * u + 1, self.disc.size), dtype=complex)
        ab[u, :] = 1.0
        local_rows = np.arange(M)[:, None]
        local_cols = np.arange(M)[None, :]
        for m, n, f in self._couplings():
            rows = (m + N) * M + local_rows
            cols = np.broadcast_to((n + N) * M + local_cols, (M, M))
            ab[u + rows - cols, cols] -= self.epsilon * self.scale * f[:, None] * self.kernels[n + N]
        return ab

    @property
    def prefers_band(self) -> bool:
        return 3 * self.bandwidth < self.disc.size

    @cached_property
    def _dense_lu(self):
        return lu_factor(self.dense_matrix(), check_finite=False)

    def condition_estimate(self) -> float:
        try:
            return float(np.linalg.cond(self.dense_matrix(), 1))
        except LinAlgError:
            return float("inf")

    def solve(self, rhs: Sequence[ModalVector]) -> list[ModalVector]:
        """Solve ``(1 - εT̂)Y = g`` for several right-hand sides at once."""

        if self.epsilon == 0.0:
            return [ModalVector(g.values.copy(), g.grid) for g in rhs]
        stacked = np.stack([g.values.ravel() for g in rhs], axis=1)
        try:
            if self.prefers_band:
                u = self.bandwidth
                flat = solve_banded((u, u), self.banded, stacked, check_finite=False)
            else:
                flat = lu_solve(self._dense_lu, stacked, check_finite=False)
        except (LinAlgError, ValueError) as exc:
            raise DiscretizationError(
                "resolvent factorization failed",
                details={"reason": str(exc), "params": self.params.describe()},
            ) from exc
        shape = rhs[0].values.shape
        solutions = [ModalVector(flat[:, k].reshape(shape), self.grid) for k in range(len(rhs))]
        for solution, g in zip(solutions, rhs):
            residual = self.residual(solution, g)
            LOGGER.debug("resolvent residual %.3e at %s", residual, self.params.describe())
            if not np.isfinite(residual) or residual > self.disc.residual_tol:
                raise DiscretizationError(
                    "resolvent residual exceeds tolerance",
                    details={
                        "residual": residual,
                        "tolerance": self.disc.residual_tol,
                        "condition_estimate": self.condition_estimate(),
                        "params": self.params.describe(),
                    },
                )
        return solutions


def apply_T(vector: ModalVector, params: SpectralParams, profile: PerturbationProfile, disc: Discretization) -> ModalVector:
    return ModalOperator(params, profile, disc).apply(vector)


def solve_resolvent(g: ModalVector, params: SpectralParams, profile: PerturbationProfile, disc: Discretization) -> ModalVector:
    return ModalOperator(params, profile, disc).solve([g])[0]


def neumann_series(
    g: ModalVector,
    params: SpectralParams,
    profile: PerturbationProfile,
    disc: Discretization,
    terms: int = 6,
) -> ModalVector:
    """``Σ_{k<=terms} (εT̂)^k g``; independent of the direct factorization."""

    operator = ModalOperator(params, profile, disc)
    total = ModalVector(g.values.copy(), g.grid)
    term = g
    for _ in range(terms):
        term = operator.epsilon * operator.apply(term)
        total = total + term
    return total


@dataclass(frozen=True)
class FunctionalBundle:
    F: complex
    Q: complex
    P_plus: complex
    P_minus: complex
    R_plus: complex
    R_minus: complex
    Y1: ModalVector
    Y2: ModalVector

    def scalars(self) -> dict[str, complex]:
        return {
            "F": self.F,
            "Q": self.Q,
            "P_plus": self.P_plus,
            "P_minus": self.P_minus,
            "R_plus": self.R_plus,
            "R_minus": self.R_minus,
        }


def functionals_from_operator(operator: ModalOperator) -> FunctionalBundle:
    """F, Q, P±, R± from one factorization with both right-hand sides."""

    params, profile, disc = operator.params, operator.profile, operator.disc
    g1 = assemble_g1(params, profile, disc)
    g2 = assemble_g2(profile, disc)
    Y1, Y2 = operator.solve([g1, g2])
    x = operator.grid.nodes
    k = params.signed_k0
    e_plus, e_minus = np.exp(1j * k * x), np.exp(-1j * k * x)
    t = params.threshold_mode
    return FunctionalBundle(
        F=Y2.average(t),
        Q=Y1.average(t),
        P_plus=Y1.average(0, e_plus),
        P_minus=Y1.average(0, e_minus),
        R_plus=Y2.average(0, e_plus),
        R_minus=Y2.average(0, e_minus),
        Y1=Y1,
        Y2=Y2,
    )


def compute_functionals(params: SpectralParams, profile: PerturbationProfile, disc: Discretization) -> FunctionalBundle:
    return functionals_from_operator(ModalOperator(params, profile, disc))


def functional_F(params: SpectralParams, profile: PerturbationProfile, disc: Discretization) -> complex:
    return compute_functionals(params, profile, disc).F


def functional_Q(params: SpectralParams, profile: PerturbationProfile, disc: Discretization) -> complex:
    return compute_functionals(params, profile, disc).Q


def functional_P(params: SpectralParams, profile: PerturbationProfile, disc: Discretization, sign: int) -> complex:
    bundle = compute_functionals(params, profile, disc)
    return bundle.P_plus if sign > 0 else bundle.P_minus


def functional_Rpm(params: SpectralParams, profile: PerturbationProfile, disc: Discretization, sign: int) -> complex:
    bundle = compute_functionals(params, profile, disc)
    return bundle.R_plus if sign > 0 else bundle.R_minus


def estimate_operator_bound(
    params: SpectralParams,
    profile: PerturbationProfile,
    disc: Discretization,
    samples: int = 8,
    seed: int = 0,
) -> float:
    """Largest observed ``‖T̂A‖ / ‖A‖`` over random inputs."""

    operator = ModalOperator(params, profile, disc)
    rng = np.random.default_rng(seed)
    shape = (2 * disc.n_modes + 1, operator.grid.size)
    ratios = []
    for _ in range(samples):
        values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        vector = ModalVector(values, operator.grid)
        ratios.append(operator.apply(vector).norm() / vector.norm())
    return float(max(ratios))


class ModalField:
    """Evaluates ``Ψ_m(x)`` from solved amplitudes.

    ``Ψ_m = H_m * A_m`` plus the incident wave on mode 0 (when ``incident``)
    and ``threshold_constant`` on the threshold mode. Amplitudes come from the
    canonical frame (or an explicit ``frame``); for negative physical ``β``
    the physical modes are ``Ψ_m = conj(Φ_{-m})``.
    """

    def __init__(
        self,
        physical: SpectralParams,
        profile: PerturbationProfile,
        disc: Discretization,
        amplitudes: ModalVector,
        *,
        incident: bool,
        threshold_constant: complex,
        frame: SpectralParams | None = None,
    ) -> None:
        self.physical = physical
        self.params = physical.canonical() if frame is None else frame
        self.profile = profile
        self.disc = disc
        self.amplitudes = amplitudes
        self.incident = incident
        self.threshold_constant = complex(threshold_constant)
        self.conjugate = physical.beta < 0

    @property
    def modes(self) -> np.ndarray:
        return self.disc.modes

    def evaluate(self, x) -> np.ndarray:
        """Return ``Ψ_m(x)`` with shape ``(2N+1, len(x))`` (physical mode order)."""

        x = np.atleast_1d(np.asarray(x, dtype=float))
        integrator = ProductIntegrator(self.amplitudes.grid, x, self.disc.sub_order)
        N = self.disc.n_modes
        raw = np.empty((2 * N + 1, x.size), dtype=complex)
        for n in self.disc.modes:
            raw[n + N] = integrator.matrix(kernel_for(int(n), self.params)) @ self.amplitudes.component(int(n))
        if self.incident:
            raw[N] += np.exp(1j * self.params.signed_k0 * x)
        raw[self.params.threshold_mode + N] += self.threshold_constant
        if self.conjugate:
            return np.conj(raw[::-1])
        return raw

    def field(self, x, y) -> np.ndarray:
        """``Ψ(x, y) = e^{iβy} Σ_m Ψ_m(x) e^{imy}``; broadcasts ``x`` against ``y``."""

        x_arr = np.asarray(x, dtype=float)
        y_arr = np.asarray(y, dtype=float)
        xb, yb = np.broadcast_arrays(x_arr, y_arr)
        modes = self.evaluate(xb.ravel())
        phases = np.exp(1j * np.outer(self.modes, yb.ravel()))
        total = np.exp(1j * self.physical.beta * yb.ravel()) * np.sum(modes * phases, axis=0)
        return total.reshape(xb.shape)

    def helmholtz_residual(self, points: int = 401, halfwidth: float | None = None) -> float:
        """Max of ``|-Ψ_m'' + ((β+m)² - ω²)Ψ_m - ε(ω²/2π) Σ_n f_{m-n}Ψ_n|`` by second differences."""

        half = self.profile.support_halfwidth if halfwidth is None else halfwidth
        x = np.linspace(-half, half, points)
        h = x[1] - x[0]
        psi = self.evaluate(x)
        second = (psi[:, 2:] - 2.0 * psi[:, 1:-1] + psi[:, :-2]) / (h * h)
        inner = x[1:-1]
        table = mode_table(self.profile, inner)
        N = self.disc.n_modes
        J = self.profile.mode_count
        omega_sq = self.physical.omega_sq
        coupled = np.zeros((2 * N + 1, inner.size), dtype=complex)
        for m in range(-N, N + 1):
            for n in range(max(-N, m - J), min(N, m + J) + 1):
                coupled[m + N] += table[m - n + J] * psi[n + N, 1:-1]
        shifts = ((self.physical.beta + self.modes) ** 2 - omega_sq)[:, None]
        residual = -second + shifts * psi[:, 1:-1] - self.physical.epsilon * omega_sq / (2.0 * np.pi) * coupled
        return float(np.max(np.abs(residual)))


__all__ = [
    "Discretization",
    "FunctionalBundle",
    "ModalField",
    "ModalOperator",
    "ModalVector",
    "apply_T",
    "assemble_g1",
    "assemble_g2",
    "average",
    "compute_functionals",
    "estimate_operator_bound",
    "functional_F",
    "functional_P",
    "functional_Q",
    "functional_Rpm",
    "functionals_from_operator",
    "neumann_series",
    "solve_resolvent",
]
