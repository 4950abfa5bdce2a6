from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from rbscatter.core.errors import ParameterDomainError, SingularPointError
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import make_parabolic, make_rectangular, make_sampled
from rbscatter.physics.resonance import perturbative_coeffs, solve_dispersion_root
from rbscatter.physics.scattering import scattering_with_constant, solve_scattering
from rbscatter.physics.spectral_kernels import SpectralParams
from rbscatter.physics.trapped_modes import (
    TrappedModeResult,
    TrappedPoint,
    build_trapped_mode,
    conjugate_mode,
    export_mode_csv,
    find_candidate_beta,
    near_mode_asymptotics,
    refine_trapped_point,
    scattering_on_curve,
    width_coefficient,
)

WIDE = make_rectangular(4.0 * math.pi)
WIDE_DISC = Discretization(n_modes=6, grid_points=192)


def _fake_result(alpha: float, q: float) -> TrappedModeResult:
    return TrappedModeResult(
        epsilon=0.01,
        beta_tr=0.47,
        nu_tr=3.5,
        omega_sq=0.28,
        beta00=15.0 / 32.0,
        kappa0=0.25,
        alpha=alpha,
        q=q,
        mode=None,  # type: ignore[arg-type]
        decay_residual=0.0,
        helmholtz_residual=0.0,
        energy=1.0,
        imag_ell=0.0,
        imag_Q=0.0,
        iterations=0,
    )


def test_candidates_of_wide_rectangular_barrier() -> None:
    candidates = find_candidate_beta(WIDE)
    assert candidates == pytest.approx([15.0 / 32.0, 3.0 / 8.0, 7.0 / 32.0], abs=1e-10)


def test_parabolic_barrier_has_no_candidates() -> None:
    assert find_candidate_beta(make_parabolic(2.0)) == []


def test_candidates_need_a_symmetric_profile() -> None:
    x = np.linspace(-2.0, 2.0, 41)
    y = 2.0 * np.pi * np.arange(8) / 8
    xx, yy = np.meshgrid(x, y, indexing="ij")
    profile = make_sampled(x, y, (1.0 - (xx / 2.0) ** 2) * (1.0 + np.cos(yy) + 0.3 * np.sin(yy)))
    with pytest.raises(ParameterDomainError):
        find_candidate_beta(profile)


def test_width_coefficient_of_wide_barrier() -> None:
    gamma0 = (17.0 / 32.0) ** 2 / (4.0 * math.pi)
    slope = 32.0 * math.pi**2
    assert width_coefficient(15.0 / 32.0, WIDE) == pytest.approx(gamma0**2 * slope**2 / 0.25**3, rel=1e-10)


def test_width_vanishes_quadratically_near_the_candidate() -> None:
    beta00 = 15.0 / 32.0
    alpha = width_coefficient(beta00, WIDE)
    for offset in (1e-5, -1e-5):
        half_width = perturbative_coeffs(beta00 + offset, WIDE).Gamma / 2.0
        assert half_width == pytest.approx(alpha * offset**2, rel=1e-2)


def test_near_mode_asymptotics_limits() -> None:
    base = _fake_result(alpha=2.0, q=0.5)
    centre = near_mode_asymptotics(0.01, 0.0, 0.03, base)
    assert centre.R_asym == pytest.approx(-1.0)
    assert centre.T_asym == pytest.approx(0.0)
    assert centre.R_additive == pytest.approx(-1.0)
    on_curve = near_mode_asymptotics(0.01, 0.2, 0.0, base)
    assert on_curve.T_asym == pytest.approx(1.0)
    assert on_curve.R_asym == pytest.approx(0.01j * 0.5)
    with pytest.raises(SingularPointError):
        near_mode_asymptotics(0.01, 0.0, 0.0, base)


def test_refinement_rejects_out_of_range_candidate() -> None:
    with pytest.raises(ParameterDomainError):
        refine_trapped_point(0.01, 0.6, WIDE, WIDE_DISC)


def test_mode_export_layout(tmp_path: Path) -> None:
    disc = Discretization(n_modes=4, grid_points=64)
    mode = build_trapped_mode(TrappedPoint(epsilon=0.01, beta_tr=0.25, nu_tr=2.0), make_parabolic(2.0), disc)
    assert mode.energy > 0.0
    x = np.linspace(-5.0, 5.0, 11)
    path = export_mode_csv(mode, tmp_path / "modes" / "mode.csv", x)
    with path.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["m", "x", "re_psi", "im_psi"]
    assert len(rows) == 1 + 9 * 11
    assert rows[1][0] == "-4"
    assert rows[-1][0] == "4"
    values = mode.modal_field(x)
    assert complex(float(rows[1][2]), float(rows[1][3])) == pytest.approx(values[0, 0], rel=1e-15, abs=1e-300)


@pytest.mark.integration
def test_trapped_mode_on_wide_rectangular_barrier() -> None:
    beta00 = 15.0 / 32.0
    result = refine_trapped_point(0.01, beta00, WIDE, WIDE_DISC)
    assert result.imag_ell < 1e-9
    assert result.imag_Q < 1e-9
    assert abs(result.beta_tr - beta00) < 0.02
    a1 = perturbative_coeffs(beta00, WIDE).a1
    assert abs(result.nu_tr - a1) < 0.5 * a1
    assert result.decay_residual < 1e-6
    assert result.energy > 0.0

    detuned = build_trapped_mode(
        TrappedPoint(epsilon=0.01, beta_tr=result.beta_tr - 0.01, nu_tr=result.nu_tr), WIDE, WIDE_DISC
    )
    assert detuned.decay_residual > 1e3 * result.decay_residual

    mirrored = conjugate_mode(result)
    assert mirrored.beta_tr == -result.beta_tr
    x = np.linspace(-15.0, 15.0, 7)
    np.testing.assert_allclose(
        mirrored.trapped.modal_field(x), np.conj(result.trapped.modal_field(x)[::-1]), rtol=1e-14
    )


@pytest.mark.integration
def test_scattering_on_zero_coupling_curve_is_weak() -> None:
    beta00 = 15.0 / 32.0
    a1 = perturbative_coeffs(beta00, WIDE).a1
    magnitudes = []
    epsilons = [0.0025, 0.005, 0.01]
    for eps in epsilons:
        point = scattering_on_curve(eps, a1 + 0.3, WIDE, WIDE_DISC, beta00=beta00)
        assert abs(point.T - 1.0) <= point.T_bound
        params = SpectralParams.create(eps, point.beta, point.nu)
        expected = scattering_with_constant(params, WIDE, WIDE_DISC, 0.0).C
        assert point.C_used == pytest.approx(expected, rel=1e-12, abs=1e-15)
        magnitudes.append(abs(point.R))
    slope = float(np.polyfit(np.log(epsilons), np.log(magnitudes), 1)[0])
    assert slope >= 0.85


@pytest.mark.integration
def test_resonance_width_grows_quadratically_away_from_the_trapped_point() -> None:
    result = refine_trapped_point(0.01, 15.0 / 32.0, WIDE, WIDE_DISC)
    offsets = [2.5e-4, 5e-4, 1e-3]
    widths = [
        solve_dispersion_root(0.01, result.beta_tr - offset, WIDE, WIDE_DISC, seed=result.nu_tr).imag
        for offset in offsets
    ]
    assert min(widths) > 0.0
    slope = float(np.polyfit(np.log(offsets), np.log(widths), 1)[0])
    assert 1.85 <= slope <= 2.15


@pytest.mark.integration
def test_near_mode_asymptotics_track_the_full_solver() -> None:
    beta00 = 15.0 / 32.0
    eps, offset = 1e-6, -1e-3
    beta = beta00 + offset
    base = _fake_result(alpha=width_coefficient(beta00, WIDE), q=perturbative_coeffs(beta00, WIDE).q)
    nu0 = solve_dispersion_root(eps, beta, WIDE, WIDE_DISC)
    width = eps * base.alpha * offset**2
    assert nu0.imag == pytest.approx(width, rel=0.15)
    for scale in (-2.0, -1.0, 1.0, 2.0):
        delta = scale * width
        params = SpectralParams.create(eps, beta, nu0.real + delta)
        solution = solve_scattering(params, WIDE, WIDE_DISC, guard_factor=0.0)
        asym = near_mode_asymptotics(eps, delta, offset, base)
        assert abs(solution.T) ** 2 == pytest.approx(abs(asym.T_asym) ** 2, abs=0.08)
        assert abs(solution.R - asym.R_asym) < 0.1
