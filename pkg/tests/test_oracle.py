from __future__ import annotations

import math

import pytest

from rbscatter.core.errors import ConfigError, NearResonanceError, ParameterDomainError
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import make_parabolic, make_rectangular
from rbscatter.physics.scattering import solve_scattering
from rbscatter.physics.spectral_kernels import SpectralParams
from rbscatter.physics.trapped_modes import refine_trapped_point
from rbscatter.validation.oracle import (
    BVPConfig,
    born_RT,
    compare,
    direct_bvp_RT,
    smallest_singular_value,
)

PROFILE = make_parabolic(2.0)
DISC = Discretization(n_modes=4, grid_points=96)


def test_default_grid_is_aligned_with_the_support() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    bvp = BVPConfig.default(params, PROFILE, n_modes=4)
    assert bvp.n_modes == 4
    assert bvp.half_length > PROFILE.support_halfwidth + 14.0 / params.kappa
    assert PROFILE.support_halfwidth / bvp.spacing == pytest.approx(round(PROFILE.support_halfwidth / bvp.spacing))
    assert bvp.half_length / bvp.spacing == pytest.approx(round(bvp.half_length / bvp.spacing))
    assert bvp.spacing <= 2.0 * math.pi / params.kappa / 20.0
    bvp.check(params, PROFILE)
    assert bvp.halved().spacing == pytest.approx(bvp.spacing / 2.0)


def test_invalid_oracle_grids_are_rejected() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    with pytest.raises(ConfigError) as excinfo:
        BVPConfig(half_length=1.0, spacing=2.0, n_modes=2).check(params, PROFILE)
    fields = {item["field"] for item in excinfo.value.details["errors"]}
    assert fields == {"half_length", "spacing", "n_modes"}


def test_oracle_refuses_degenerate_threshold_closure() -> None:
    with pytest.raises(ParameterDomainError):
        direct_bvp_RT(SpectralParams.create(0.01, 0.25, 0.001), PROFILE)
    with pytest.raises(ParameterDomainError):
        direct_bvp_RT(SpectralParams.create(0.01, 0.25, 1.0 + 0.1j), PROFILE)


def test_oracle_without_perturbation_transmits_everything() -> None:
    params = SpectralParams.create(0.0, 0.25, 2.0)
    result = direct_bvp_RT(params, PROFILE, BVPConfig.default(params, PROFILE, n_modes=4))
    assert abs(result.R) < 1e-5
    assert abs(result.T - 1.0) < 1e-5


def test_oracle_agrees_with_integral_equation_solver() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    result = direct_bvp_RT(params, PROFILE, BVPConfig.default(params, PROFILE, n_modes=4))
    solution = solve_scattering(params, PROFILE, DISC)
    assert abs(result.R - solution.R) < 1e-6
    assert abs(result.T - solution.T) < 1e-6
    assert result.coarse_flag is False
    assert result.R_fine is not None
    assert result.refinement_estimate < 1e-3
    assert result.unitarity_defect < 1e-6


def test_comparison_reports_pass_and_coarse_failure() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    solution = solve_scattering(params, PROFILE, DISC)
    reference = {"R": [solution.R], "T": [solution.T]}
    assert compare(reference, reference, {"R": 1e-12, "T": 1e-12}).passed

    coarse = BVPConfig(half_length=0.4 * 58, spacing=0.4, n_modes=4, richardson=False)
    result = direct_bvp_RT(params, PROFILE, coarse)
    report = compare(reference, {"R": [result.R], "T": [result.T]}, {"R": 1e-6, "T": 1e-6})
    assert report.passed is False
    assert report.as_dict()["quantities"]["T"]["passed"] is False

    flagged = direct_bvp_RT(params, PROFILE, coarse, richardson=True)
    assert flagged.coarse_flag is True

    with pytest.raises(ParameterDomainError):
        compare({"R": [1.0, 2.0]}, {"R": [1.0]}, {"R": 1e-6})


def test_smallest_singular_value_is_reproducible() -> None:
    params = SpectralParams.create(0.01, 0.25, 2.0)
    bvp = BVPConfig.default(params, PROFILE, n_modes=4)
    first = smallest_singular_value(params, PROFILE, bvp, iterations=10, seed=1)
    assert first > 0.0
    assert first == smallest_singular_value(params, PROFILE, bvp, iterations=10, seed=1)


def test_born_coefficients_without_perturbation() -> None:
    born = born_RT(SpectralParams.create(0.0, 0.25, 2.0), PROFILE)
    assert (born.R, born.T, born.background) == (0j, 1 + 0j, 0j)


def test_born_coefficients_refuse_the_resonance() -> None:
    with pytest.raises(NearResonanceError):
        born_RT(SpectralParams.create(0.01, 0.25, 0.75), PROFILE)


def test_born_error_is_second_order() -> None:
    errors = []
    for eps in (1e-3, 2e-3):
        params = SpectralParams.create(eps, 0.25, 3.0)
        born = born_RT(params, PROFILE)
        solution = solve_scattering(params, PROFILE, DISC)
        errors.append(abs(born.R - solution.R))
    assert 3.0 <= errors[1] / errors[0] <= 5.0


def test_born_coefficients_follow_negative_beta_mirror() -> None:
    positive = born_RT(SpectralParams.create(0.002, 0.25, 3.0), PROFILE)
    negative = born_RT(SpectralParams.create(0.002, -0.25, 3.0), PROFILE)
    assert negative.R == pytest.approx(positive.R, abs=1e-15)
    assert negative.T == pytest.approx(positive.T, abs=1e-15)


def test_background_vanishes_at_wide_barrier_candidate() -> None:
    born = born_RT(SpectralParams.create(1e-3, 15.0 / 32.0, 1.0), make_rectangular(4.0 * math.pi))
    assert abs(born.background) < 1e-6


@pytest.mark.integration
def test_unforced_system_is_nearly_singular_at_the_trapped_point() -> None:
    wide = make_rectangular(4.0 * math.pi)
    result = refine_trapped_point(0.01, 15.0 / 32.0, wide, Discretization(n_modes=6, grid_points=192))
    sigma = {}
    for shift in (-0.5, 0.0, 0.5):
        params = SpectralParams.create(0.01, result.beta_tr, result.nu_tr + shift)
        sigma[shift] = smallest_singular_value(params, wide, BVPConfig.default(params, wide, n_modes=6))
    assert sigma[0.0] < 0.1 * min(sigma[-0.5], sigma[0.5])
