from __future__ import annotations

import math

import numpy as np
import pytest

from rbscatter.core.errors import DegenerateResonanceError, ParameterDomainError
from rbscatter.core.serialization import canonical_json
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import fourier_transform, make_parabolic
from rbscatter.physics.resonance import (
    asymptotic_RT,
    breit_wigner,
    complex_secant,
    dispersion_value,
    fano,
    find_total_reflection,
    find_total_transmission,
    lagrange_ratio,
    line_shape_coefficients,
    perturbative_coeffs,
    resonance_report,
    solve_dispersion_root,
)
from rbscatter.physics.scattering import solve_scattering
from rbscatter.physics.spectral_kernels import SpectralParams

PROFILE = make_parabolic(2.0)
DISC = Discretization(n_modes=4, grid_points=64)


def _slope(xs: list[float], ys: list[float]) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def test_perturbative_coefficients_for_parabolic_barrier() -> None:
    coeffs = perturbative_coeffs(0.25, PROFILE)
    gamma0 = 0.75**2 / (4.0 * math.pi)
    assert coeffs.gamma0 == pytest.approx(gamma0)
    assert coeffs.a1 == pytest.approx(0.75, rel=1e-12)
    assert coeffs.Gamma == pytest.approx(2.0 * coeffs.Im_a2)
    assert coeffs.Gamma == pytest.approx(0.2634, rel=2e-3)
    assert coeffs.q == pytest.approx(gamma0 * fourier_transform(PROFILE, 0, 2.0 * coeffs.kappa).real / coeffs.kappa)
    assert coeffs.a2 is None
    with pytest.raises(ParameterDomainError):
        perturbative_coeffs(-0.25, PROFILE)


def test_second_order_coefficient_matches_closed_form_width() -> None:
    coeffs = perturbative_coeffs(0.25, PROFILE, DISC)
    assert coeffs.a2 is not None
    assert coeffs.a2.imag == pytest.approx(coeffs.Im_a2, rel=1e-6)


def test_complex_secant_finds_simple_roots() -> None:
    root, trace = complex_secant(lambda z: z * z + 1.0, 0.5 + 0.5j, 0.6 + 0.6j)
    assert root == pytest.approx(1j, abs=1e-12)
    assert trace.iterations < 20


def test_dispersion_root_solves_the_dispersion_relation() -> None:
    nu0 = solve_dispersion_root(0.01, 0.25, PROFILE, DISC)
    assert abs(dispersion_value(0.01, 0.25, nu0, PROFILE, DISC)) < 1e-9
    assert nu0.imag > 0.0
    assert abs(nu0.real - 0.75) < 0.05
    assert lagrange_ratio(0.01, 0.25, nu0 + 0.01, nu0, PROFILE, DISC) == pytest.approx(1.0, abs=0.1)


@pytest.mark.integration
def test_resonance_converges_to_perturbative_expansion() -> None:
    coeffs = perturbative_coeffs(0.25, PROFILE)
    epsilons = [0.001, 0.002, 0.004, 0.008]
    roots = [solve_dispersion_root(eps, 0.25, PROFILE, DISC) for eps in epsilons]
    real_gap = [abs(root.real - coeffs.a1) for root in roots]
    imag_gap = [abs(root.imag - eps * coeffs.Gamma / 2.0) for root, eps in zip(roots, epsilons)]
    assert 0.85 <= _slope(epsilons, real_gap) <= 1.15
    assert 1.85 <= _slope(epsilons, imag_gap) <= 2.15


def test_line_shape_coefficients_reproduce_solver() -> None:
    for nu in (0.5, 2.0, 3.5):
        shape = line_shape_coefficients(0.01, 0.25, nu, PROFILE, DISC)
        solution = solve_scattering(SpectralParams.create(0.01, 0.25, nu), PROFILE, DISC)
        assert shape.R == pytest.approx(solution.R, abs=1e-9)
        assert shape.T == pytest.approx(solution.T, abs=1e-9)


def test_breit_wigner_and_fano_profiles() -> None:
    Gamma, q, eps = 0.26, 0.42, 0.01
    assert breit_wigner(0.0, eps, Gamma) == pytest.approx(1.0)
    assert breit_wigner(eps * Gamma / 2.0, eps, Gamma) == pytest.approx(0.5)
    assert fano(-Gamma / (2.0 * q), eps, Gamma, q) == pytest.approx(0.0, abs=1e-15)
    assert fano(0.0, eps, Gamma, q) == pytest.approx(1.0)
    deltas = np.linspace(-1.0, 1.0, 5)
    assert breit_wigner(deltas, eps, Gamma).shape == (5,)
    with pytest.raises(DegenerateResonanceError):
        breit_wigner(0.0, eps, 0.0)
    with pytest.raises(DegenerateResonanceError):
        fano(0.0, eps, 1e-14, q)


def test_asymptotic_coefficients_at_resonance_centre() -> None:
    asym = asymptotic_RT(0.01, 0.0, 0.25, PROFILE)
    assert abs(asym.R_asym) == pytest.approx(1.0, rel=1e-12)
    assert abs(asym.T_asym) == pytest.approx(0.0, abs=1e-12)
    far = asymptotic_RT(0.01, 1e5, 0.25, PROFILE)
    coeffs = perturbative_coeffs(0.25, PROFILE)
    background = 1j * 0.01 * coeffs.gamma0 * np.conj(coeffs.f0_at_2kappa) / coeffs.kappa
    assert far.R_asym == pytest.approx(background, rel=1e-4)


def test_asymptotic_reflection_error_is_second_order_off_centre() -> None:
    errors = []
    for eps in (0.01, 0.005):
        nu0 = solve_dispersion_root(eps, 0.25, PROFILE, DISC)
        solution = solve_scattering(SpectralParams.create(eps, 0.25, nu0.real - 0.5), PROFILE, DISC)
        errors.append(abs(solution.R - asymptotic_RT(eps, -0.5, 0.25, PROFILE).R_asym))
    assert errors[0] < 1e-4
    assert errors[0] / errors[1] >= 3.0


def test_total_transmission_and_reflection_points() -> None:
    transmission = find_total_transmission(0.01, 0.25, PROFILE, DISC)
    reflection = find_total_reflection(0.01, 0.25, PROFILE, DISC)
    assert transmission.found and reflection.found
    assert transmission.check_value < 1e-7
    assert reflection.check_value < 1e-7
    r_zero = solve_scattering(SpectralParams.create(0.01, 0.25, transmission.nu), PROFILE, DISC, guard_factor=0.0)
    t_zero = solve_scattering(SpectralParams.create(0.01, 0.25, reflection.nu), PROFILE, DISC, guard_factor=0.0)
    assert abs(r_zero.R) < 1e-7
    assert abs(t_zero.T) < 1e-7
    assert abs(reflection.nu - 0.75) < 0.05
    assert transmission.nu < reflection.nu


@pytest.mark.integration
def test_fano_zero_prediction_improves_with_epsilon() -> None:
    gaps = []
    epsilons = [0.0025, 0.005, 0.01]
    for eps in epsilons:
        report = resonance_report(eps, 0.25, PROFILE, DISC)
        gaps.append(abs(report.nu_a - report.fano_zero_prediction))
    assert _slope(epsilons, gaps) >= 0.85


def test_resonance_report_serializes() -> None:
    report = resonance_report(0.01, 0.25, PROFILE, DISC, with_zeros=False)
    assert report.nu_a is None and report.nu_b is None
    assert report.fano_zero_prediction == pytest.approx(report.nu0.real - report.Gamma / (2.0 * report.q))
    text = canonical_json(report.as_dict())
    assert '"nu0":{"im":' in text


@pytest.mark.integration
def test_breit_wigner_tracks_full_reflection_near_resonance() -> None:
    eps = 0.01
    coeffs = perturbative_coeffs(0.25, PROFILE)
    nu0 = solve_dispersion_root(eps, 0.25, PROFILE, DISC)
    deltas = np.linspace(-5.0, 5.0, 11) * eps * coeffs.Gamma
    worst = 0.0
    for delta in deltas:
        solution = solve_scattering(SpectralParams.create(eps, 0.25, nu0.real + delta), PROFILE, DISC)
        worst = max(worst, abs(abs(solution.R) ** 2 - float(breit_wigner(delta, eps, coeffs.Gamma))))
    assert worst <= 0.15
