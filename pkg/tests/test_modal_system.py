from __future__ import annotations

import numpy as np
import pytest

from rbscatter.core.errors import ConfigError, DiscretizationError
from rbscatter.physics.modal_system import (
    Discretization,
    ModalOperator,
    ModalVector,
    assemble_g1,
    assemble_g2,
    compute_functionals,
    estimate_operator_bound,
    neumann_series,
    solve_resolvent,
)
from rbscatter.physics.perturbation import fourier_transform, make_parabolic
from rbscatter.physics.spectral_kernels import SpectralParams

PROFILE = make_parabolic(2.0)
DISC = Discretization(n_modes=4, grid_points=64)


def test_discretization_checks() -> None:
    DISC.check(PROFILE)
    for bad in (
        Discretization(n_modes=2, grid_points=64),
        Discretization(n_modes=4, grid_points=60),
        Discretization(n_modes=4, grid_points=16),
        Discretization(n_modes=4, grid_points=64, sub_order=4),
        Discretization(n_modes=4, grid_points=64, quadrature="trapezoid"),
    ):
        with pytest.raises(ConfigError):
            bad.check(PROFILE)
    refined = DISC.refined(grid_factor=2, extra_modes=1)
    assert (refined.n_modes, refined.grid_points, refined.panels) == (5, 128, 16)


def test_modal_vector_arithmetic_and_norms() -> None:
    grid = DISC.grid(PROFILE)
    ones = ModalVector(np.ones((9, grid.size), dtype=complex), grid)
    assert ones.average(0) == pytest.approx(4.0)
    assert ones.norm() == pytest.approx(3.0)
    assert (ones + ones - 0.5 * ones).values[0, 0] == pytest.approx(1.5)
    assert ones.odd_part() == 0.0
    assert np.all(ones.component(7) == 0)
    with pytest.raises(DiscretizationError):
        ones + ModalVector.zeros(3, grid)


def test_right_hand_sides_embed_the_profile_modes() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    g1 = assemble_g1(params, PROFILE, DISC)
    g2 = assemble_g2(PROFILE, DISC)
    x = g1.grid.nodes
    shape = 1.0 - (x / 2.0) ** 2
    np.testing.assert_allclose(g1.component(0), 2.0 * np.pi * shape * np.exp(1j * params.k0 * x), atol=1e-14)
    np.testing.assert_allclose(g2.component(-1), 2.0 * np.pi * shape, atol=1e-14)
    np.testing.assert_allclose(g2.component(0), np.pi * shape, atol=1e-14)
    assert np.all(g2.component(1) == 0)
    assert np.all(g1.component(2) == 0)


def test_resolvent_agrees_with_neumann_series() -> None:
    params = SpectralParams.create(0.005, 0.25, 2.0)
    g = assemble_g1(params, PROFILE, DISC)
    direct = solve_resolvent(g, params, PROFILE, DISC)
    series = neumann_series(g, params, PROFILE, DISC, terms=14)
    assert (direct - series).norm() < 1e-9 * direct.norm()
    operator = ModalOperator(params, PROFILE, DISC)
    assert operator.residual(direct, g) < 1e-12


def test_band_and_dense_solves_agree() -> None:
    params = SpectralParams.create(0.02, 0.25, 1.0)
    operator = ModalOperator(params, PROFILE, DISC)
    g = assemble_g2(PROFILE, DISC)
    (banded,) = operator.solve([g])
    dense = np.linalg.solve(operator.dense_matrix(), g.values.ravel())
    np.testing.assert_allclose(banded.values.ravel(), dense, rtol=1e-10, atol=1e-12)


def test_zero_epsilon_resolvent_is_identity() -> None:
    params = SpectralParams.create(0.0, 0.25, 1.0)
    g = assemble_g2(PROFILE, DISC)
    solution = solve_resolvent(g, params, PROFILE, DISC)
    np.testing.assert_array_equal(solution.values, g.values)
    assert solution.values is not g.values


def test_functionals_reduce_to_transforms_for_small_epsilon() -> None:
    params = SpectralParams.create(1e-4, 0.25, 1.0)
    bundle = compute_functionals(params, PROFILE, DISC)
    k = params.k0.real
    assert bundle.F == pytest.approx(fourier_transform(PROFILE, 0, 0.0), rel=1e-2)
    assert bundle.Q == pytest.approx(fourier_transform(PROFILE, -1, -k), rel=1e-2)
    assert bundle.P_minus == pytest.approx(fourier_transform(PROFILE, 0, 0.0), rel=1e-2)
    assert bundle.R_plus == pytest.approx(fourier_transform(PROFILE, 1, -k), rel=1e-2)


def test_symmetric_profile_identities() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    bundle = compute_functionals(params, PROFILE, DISC)
    scale = max(1.0, abs(bundle.Q))
    assert abs(bundle.R_plus - bundle.R_minus) < 1e-12 * scale
    assert abs(bundle.Q - bundle.R_plus) < 1e-8 * scale
    assert bundle.Y2.odd_part() < 1e-12 * bundle.Y2.norm()


def test_solutions_decay_across_modes() -> None:
    params = SpectralParams.create(0.05, 0.25, 1.0)
    bundle = compute_functionals(params, PROFILE, Discretization(n_modes=6, grid_points=64))
    assert bundle.Y2.decay_exponent() > 1.0
    sups = bundle.Y2.sup_by_mode()
    assert sups[-1] < sups[6]


def test_operator_bound_is_reproducible() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    first = estimate_operator_bound(params, PROFILE, DISC, samples=4, seed=3)
    assert first > 0.0
    assert first == estimate_operator_bound(params, PROFILE, DISC, samples=4, seed=3)


def test_apply_rejects_mismatched_vectors() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    operator = ModalOperator(params, PROFILE, DISC)
    with pytest.raises(DiscretizationError):
        operator.apply(ModalVector.zeros(3, operator.grid))
