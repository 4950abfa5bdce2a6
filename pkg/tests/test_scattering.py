from __future__ import annotations

import numpy as np
import pytest

from rbscatter.core.errors import NearResonanceError, ParameterDomainError
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import make_parabolic, make_rectangular
from rbscatter.physics.scattering import (
    evaluate_field,
    helmholtz_residual,
    scattering_with_constant,
    solve_scattering,
    tail_residual,
)
from rbscatter.physics.spectral_kernels import SpectralParams

PROFILE = make_parabolic(2.0)
DISC = Discretization(n_modes=4, grid_points=96)


def test_zero_epsilon_is_free_propagation() -> None:
    solution = solve_scattering(SpectralParams.create(0.0, 0.3, 1.7), PROFILE, DISC)
    assert solution.R == 0
    assert solution.T == 1
    assert solution.unitarity_defect == 0.0
    x = np.array([-1.0, 0.5])
    psi0 = solution.modal_field(x)[DISC.n_modes]
    np.testing.assert_allclose(psi0, np.exp(1j * np.sqrt(1.0 - 0.6) * x))


@pytest.mark.parametrize("beta", [0.1, 0.25, 0.4])
@pytest.mark.parametrize("nu", [1.5, 2.5, 4.0])
def test_energy_is_conserved(beta: float, nu: float) -> None:
    solution = solve_scattering(SpectralParams.create(0.01, beta, nu), PROFILE, DISC)
    assert solution.unitarity_defect < 1e-8
    assert solution.route_gap < 1e-10
    assert abs(solution.R) > 0.0


@pytest.mark.parametrize("nu", [0.0, -3.0])
def test_non_positive_frequency_is_rejected(nu: float) -> None:
    with pytest.raises(ParameterDomainError):
        solve_scattering(SpectralParams.create(0.01, 0.25, nu), PROFILE, DISC)


def test_threshold_mode_decays_away_from_the_support() -> None:
    solution = solve_scattering(SpectralParams.create(0.01, 0.25, 3.0), PROFILE, DISC)
    threshold = solution.modal_field(np.array([-300.0, -100.0, 100.0, 300.0]))[DISC.n_modes - 1]
    assert abs(threshold[0]) < abs(threshold[1]) < 1.0
    assert abs(threshold[3]) < abs(threshold[2]) < 1.0


def test_reflection_is_first_order_in_epsilon() -> None:
    small = solve_scattering(SpectralParams.create(0.001, 0.25, 3.0), PROFILE, DISC)
    large = solve_scattering(SpectralParams.create(0.002, 0.25, 3.0), PROFILE, DISC)
    assert abs(large.R) / abs(small.R) == pytest.approx(2.0, rel=0.05)


def test_negative_beta_reproduces_mirror_point() -> None:
    positive = solve_scattering(SpectralParams.create(0.01, 0.25, 2.0), PROFILE, DISC)
    negative = solve_scattering(SpectralParams.create(0.01, -0.25, 2.0), PROFILE, DISC)
    assert negative.R == pytest.approx(positive.R, abs=1e-12)
    assert negative.T == pytest.approx(positive.T, abs=1e-12)
    assert negative.unitarity_defect < 1e-8


def test_field_matches_asymptotics_and_modal_equations() -> None:
    solution = solve_scattering(SpectralParams.create(0.01, 0.25, 2.0), PROFILE, DISC)
    assert tail_residual(solution) < 1e-9
    assert helmholtz_residual(solution) < 1e-3
    assert helmholtz_residual(solution, 801) < 1e-3
    x = np.array([-0.7, 0.0, 0.7])
    y = np.array([0.0, 1.0, 2.0])
    field = evaluate_field(solution, x, y)
    modes = solution.modal_field(x)
    expected = np.exp(0.25j * y) * np.sum(modes * np.exp(1j * np.outer(DISC.modes, y)), axis=0)
    np.testing.assert_allclose(field, expected, rtol=1e-12)


def test_guard_refuses_points_at_the_pole() -> None:
    with pytest.raises(NearResonanceError) as excinfo:
        solve_scattering(SpectralParams.create(0.01, 0.25, 0.75), PROFILE, DISC, guard_factor=10.0)
    assert excinfo.value.details["threshold"] > excinfo.value.details["denominator"]
    solution = solve_scattering(SpectralParams.create(0.01, 0.25, 0.75), PROFILE, DISC, guard_factor=0.0)
    assert solution.unitarity_defect < 1e-8


def test_complex_frequency_is_rejected() -> None:
    with pytest.raises(ParameterDomainError):
        solve_scattering(SpectralParams.create(0.01, 0.25, 1.0 + 0.1j), PROFILE, DISC)


def test_record_layout() -> None:
    record = solve_scattering(SpectralParams.create(0.01, 0.25, 2.0), PROFILE, DISC).record()
    assert set(record) == {"epsilon", "beta", "nu", "R_re", "R_im", "T_re", "T_im", "unitarity_defect"}
    assert record["R_re"] ** 2 + record["R_im"] ** 2 + record["T_re"] ** 2 + record["T_im"] ** 2 == pytest.approx(1.0)


def test_zero_threshold_constant_leaves_only_the_background() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    solution = scattering_with_constant(params, PROFILE, DISC, 0.0)
    prefactor = 1j * params.epsilon * params.gamma / params.k0
    assert solution.R == pytest.approx(prefactor * solution.functionals.P_plus, abs=1e-12)
    assert solution.T == pytest.approx(1.0 + prefactor * solution.functionals.P_minus, abs=1e-12)
    free = scattering_with_constant(SpectralParams.create(0.0, 0.3, 1.0), PROFILE, DISC, 0.0)
    assert free.R == 0 and free.T == 1


def test_rectangular_barrier_scatters_unitarily() -> None:
    profile = make_rectangular(1.0)
    solution = solve_scattering(SpectralParams.create(0.02, 0.2, 1.5), profile, Discretization(n_modes=4, grid_points=64))
    assert solution.unitarity_defect < 1e-8


@pytest.mark.integration
@pytest.mark.parametrize("epsilon", [1e-3, 1e-2, 5e-2])
def test_energy_is_conserved_across_frequency_grid(epsilon: float) -> None:
    for nu in np.linspace(0.3, 6.0, 12):
        solution = solve_scattering(SpectralParams.create(epsilon, 0.25, float(nu)), PROFILE, DISC)
        assert solution.unitarity_defect < 1e-8
        assert solution.route_gap < 1e-10
