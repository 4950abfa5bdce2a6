"""Periodic perturbations f(x, y), their Fourier modes f_j(x) and transforms.

``f`` is 2π-periodic in ``y`` and vanishes for ``|x| > R``. The modes are

    f_j(x) = ∫_0^{2π} e^{-ijy} f(x, y) dy,      f̃_j(ξ) = ∫ e^{-iξx} f_j(x) dx.

Two analytic families ``f(x, y) = g(x)(1 + cos y)`` are built in (rectangular
and parabolic barriers, ``R = a``, ``J = 1``); arbitrary real profiles are
accepted as samples on a uniform ``(x, y)`` lattice.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from rbscatter.core.errors import ModeRangeError, ParameterDomainError, ProfileLoadError
from rbscatter.core.serialization import format_float
from rbscatter.physics.quadrature import CompositeGaussLegendre

LOGGER = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
SERIES_RADIUS = 0.5
SAMPLED_CELL_ORDER = 8
MODE_PRESENCE_TOL = 1e-12
BUILTIN_SYMMETRY_TOL = 1e-12
LATTICE_TOL = 1e-9

# Taylor coefficients of S(z) = (sin z - z cos z) / z^3 = sum_n c_n z^{2n}
_S_COEFFS = np.array([(-1) ** n * 2.0 * (n + 1) / math.factorial(2 * n + 3) for n in range(10)])


class ProfileKind(str, Enum):
    RECTANGULAR = "rectangular"
    PARABOLIC = "parabolic"
    SAMPLED = "sampled"


def _even_series(z: np.ndarray, coeffs: np.ndarray, *, derivative: bool = False) -> np.ndarray:
    z2 = z * z
    if not derivative:
        return np.polynomial.polynomial.polyval(z2, coeffs)
    slopes = coeffs[1:] * 2.0 * np.arange(1, coeffs.size)
    return z * np.polynomial.polynomial.polyval(z2, slopes)


def _cubic_ratio(z: np.ndarray) -> np.ndarray:
    """S(z) = (sin z - z cos z)/z^3, continuous at 0."""

    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_RADIUS
    out[small] = _even_series(z[small], _S_COEFFS)
    zl = z[~small]
    out[~small] = (np.sin(zl) - zl * np.cos(zl)) / zl**3
    return out


def _cubic_ratio_derivative(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_RADIUS
    out[small] = _even_series(z[small], _S_COEFFS, derivative=True)
    zl = z[~small]
    out[~small] = np.sin(zl) / zl**2 - 3.0 * _cubic_ratio(zl) / zl
    return out


@dataclass(frozen=True, eq=False)
class PerturbationProfile:
    """Immutable description of ``f``; safe to share across sweep workers."""

    kind: ProfileKind
    support_halfwidth: float
    mode_count: int
    symmetric: bool
    a: float | None = None
    x_lattice: np.ndarray | None = field(default=None, repr=False)
    y_lattice: np.ndarray | None = field(default=None, repr=False)
    samples: np.ndarray | None = field(default=None, repr=False)
    _lattice_modes: np.ndarray | None = field(default=None, repr=False)
    _spline: CubicSpline | None = field(default=None, repr=False)
    _quadrature: CompositeGaussLegendre | None = field(default=None, repr=False)
    _quadrature_modes: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_builtin(self) -> bool:
        return self.kind is not ProfileKind.SAMPLED

    def describe(self) -> dict[str, object]:
        payload: dict[str, object] = {
            "kind": self.kind.value,
            "support_halfwidth": self.support_halfwidth,
            "mode_count": self.mode_count,
            "symmetric": self.symmetric,
        }
        if self.a is not None:
            payload["a"] = self.a
        if self.samples is not None:
            payload["lattice"] = [int(self.samples.shape[0]), int(self.samples.shape[1])]
        return payload


def _check_mode(profile: PerturbationProfile, j: int) -> None:
    if abs(j) > profile.mode_count:
        raise ModeRangeError(
            f"mode {j} outside the available range |j| <= {profile.mode_count}",
            details={"j": j, "mode_count": profile.mode_count},
        )


def _builtin_factor(j: int) -> float:
    if j == 0:
        return TWO_PI
    if abs(j) == 1:
        return math.pi
    return 0.0


def _builtin_shape(profile: PerturbationProfile, x: np.ndarray) -> np.ndarray:
    a = float(profile.a)
    ax = np.abs(x)
    if profile.kind is ProfileKind.RECTANGULAR:
        # half value on the jump keeps centred differences second order there
        return np.where(ax < a, 1.0, np.where(ax == a, 0.5, 0.0))
    return np.where(ax <= a, 1.0 - (x / a) ** 2, 0.0)


def _builtin_shape_transform(profile: PerturbationProfile, xi: np.ndarray, *, derivative: bool = False) -> np.ndarray:
    a = float(profile.a)
    z = a * xi
    if profile.kind is ProfileKind.RECTANGULAR:
        if derivative:
            return -2.0 * a * a * z * _cubic_ratio(z)
        return 2.0 * a * np.sinc(z / math.pi)
    if derivative:
        return 4.0 * a * a * _cubic_ratio_derivative(z)
    return 4.0 * a * _cubic_ratio(z)


def fourier_mode(profile: PerturbationProfile, j: int, x: np.ndarray | None = None) -> np.ndarray:
    """Return ``f_j`` sampled at ``x`` (default: the profile's own lattice or 257 points)."""

    _check_mode(profile, j)
    if x is None:
        if profile.x_lattice is not None:
            x = profile.x_lattice
        else:
            x = np.linspace(-profile.support_halfwidth, profile.support_halfwidth, 257)
    x = np.asarray(x, dtype=float)
    if profile.is_builtin:
        return (_builtin_factor(j) * _builtin_shape(profile, x)).astype(complex)
    return _sampled_mode_values(profile, j, x)


def mode_table(profile: PerturbationProfile, x: np.ndarray) -> np.ndarray:
    """All modes at ``x``; row ``j + J`` holds ``f_j``."""

    J = profile.mode_count
    return np.stack([fourier_mode(profile, j, x) for j in range(-J, J + 1)])


def fourier_transform(profile: PerturbationProfile, j: int, xi):
    """f̃_j(ξ); accepts scalars (returns complex) or arrays."""

    _check_mode(profile, j)
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if profile.is_builtin:
        values = (_builtin_factor(j) * _builtin_shape_transform(profile, xi_arr)).astype(complex)
    else:
        values = _sampled_transform(profile, j, xi_arr, derivative=False)
    return complex(values[0]) if np.ndim(xi) == 0 else values


def fourier_transform_derivative(profile: PerturbationProfile, j: int, xi):
    """d f̃_j / dξ."""

    _check_mode(profile, j)
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if profile.is_builtin:
        values = (_builtin_factor(j) * _builtin_shape_transform(profile, xi_arr, derivative=True)).astype(complex)
    else:
        values = _sampled_transform(profile, j, xi_arr, derivative=True)
    return complex(values[0]) if np.ndim(xi) == 0 else values


def _make_builtin(kind: ProfileKind, a: float) -> PerturbationProfile:
    if not (isinstance(a, (int, float)) and math.isfinite(a) and a > 0):
        raise ParameterDomainError(f"{kind.value} barrier requires a > 0", details={"a": a})
    return PerturbationProfile(kind=kind, support_halfwidth=float(a), mode_count=1, symmetric=True, a=float(a))


def make_rectangular(a: float) -> PerturbationProfile:
    return _make_builtin(ProfileKind.RECTANGULAR, a)


def make_parabolic(a: float) -> PerturbationProfile:
    return _make_builtin(ProfileKind.PARABOLIC, a)


# ---------------------------------------------------------------------------
# sampled profiles


def _lattice_symmetry_defects(samples: np.ndarray) -> tuple[float, float]:
    x_defect = float(np.max(np.abs(samples - samples[::-1, :])))
    mirrored = np.roll(samples[:, ::-1], 1, axis=1)  # column l -> (-l) mod Ny
    y_defect = float(np.max(np.abs(samples - mirrored)))
    return x_defect, y_defect


def make_sampled(
    x: np.ndarray,
    y: np.ndarray,
    values: np.ndarray,
    *,
    mode_count: int | None = None,
) -> PerturbationProfile:
    """Build a profile from ``values[i, l] = f(x_i, y_l)`` on a uniform lattice.

    ``x`` must cover ``[-R, R]`` including both ends; ``y`` must be
    ``2πl/Ny`` for ``l = 0..Ny-1``.
    """

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    values = np.asarray(values)
    if np.iscomplexobj(values):
        if np.max(np.abs(values.imag)) > 0:
            raise ProfileLoadError("sampled perturbation must be real-valued")
        values = values.real
    values = values.astype(float)
    if values.shape != (x.size, y.size):
        raise ProfileLoadError(
            "sample grid shape does not match the lattice",
            details={"shape": list(values.shape), "nx": x.size, "ny": y.size},
        )
    if x.size < 4 or y.size < 3:
        raise ProfileLoadError("lattice needs at least 4 x-points and 3 y-points")
    hx = np.diff(x)
    if np.any(hx <= 0) or np.max(np.abs(hx - hx[0])) > LATTICE_TOL * max(1.0, abs(hx[0])):
        raise ProfileLoadError("x lattice must be uniform and increasing")
    halfwidth = float(x[-1])
    if halfwidth <= 0 or abs(x[0] + halfwidth) > LATTICE_TOL * max(1.0, halfwidth):
        raise ProfileLoadError("x lattice must be symmetric about 0", details={"x_min": x[0], "x_max": x[-1]})
    ny = y.size
    expected_y = TWO_PI * np.arange(ny) / ny
    if np.max(np.abs(y - expected_y)) > LATTICE_TOL * TWO_PI:
        raise ProfileLoadError("y lattice must be 2*pi*l/Ny for l = 0..Ny-1")
    if not np.all(np.isfinite(values)):
        raise ProfileLoadError("sampled perturbation contains non-finite values")

    # trapezoid rule in y (spectral for periodic data) == scaled DFT
    spectrum = (TWO_PI / ny) * np.fft.fft(values, axis=1)
    max_mode = (ny - 1) // 2
    scale = max(float(np.max(np.abs(spectrum))), 1e-300)
    if mode_count is None:
        present = [j for j in range(1, max_mode + 1)
                   if np.max(np.abs(spectrum[:, j])) > MODE_PRESENCE_TOL * scale
                   or np.max(np.abs(spectrum[:, -j])) > MODE_PRESENCE_TOL * scale]
        mode_count = max(present) if present else 1
    if not 1 <= mode_count <= max_mode:
        raise ProfileLoadError(
            "mode_count outside the range resolved by the y lattice",
            details={"mode_count": mode_count, "max_mode": max_mode},
        )
    J = mode_count
    lattice_modes = np.stack([spectrum[:, j % ny] for j in range(-J, J + 1)])
    stacked = np.concatenate([lattice_modes.real, lattice_modes.imag], axis=0).T
    spline = CubicSpline(x, stacked, axis=0, bc_type="not-a-knot", extrapolate=False)

    quadrature = CompositeGaussLegendre(edges=x, order=SAMPLED_CELL_ORDER)
    at_nodes = spline(quadrature.nodes)
    quadrature_modes = at_nodes[:, : 2 * J + 1].T + 1j * at_nodes[:, 2 * J + 1 :].T

    x_defect, y_defect = _lattice_symmetry_defects(values)
    tol = 1e-10 * max(float(np.max(np.abs(values))), 1e-300)
    profile = PerturbationProfile(
        kind=ProfileKind.SAMPLED,
        support_halfwidth=halfwidth,
        mode_count=J,
        symmetric=bool(x_defect <= tol and y_defect <= tol),
        x_lattice=x,
        y_lattice=y,
        samples=values,
        _lattice_modes=lattice_modes,
        _spline=spline,
        _quadrature=quadrature,
        _quadrature_modes=quadrature_modes,
    )
    LOGGER.debug("sampled profile R=%s J=%s symmetric=%s", halfwidth, J, profile.symmetric)
    return profile


def _sampled_mode_values(profile: PerturbationProfile, j: int, x: np.ndarray) -> np.ndarray:
    J = profile.mode_count
    flat = np.atleast_1d(x).ravel()
    out = np.zeros(flat.shape, dtype=complex)
    inside = np.abs(flat) <= profile.support_halfwidth
    if np.any(inside):
        evaluated = profile._spline(flat[inside])
        out[inside] = evaluated[:, j + J] + 1j * evaluated[:, 2 * J + 1 + j + J]
    return out.reshape(np.shape(x))


def _sampled_transform(profile: PerturbationProfile, j: int, xi: np.ndarray, *, derivative: bool) -> np.ndarray:
    quad = profile._quadrature
    mode = profile._quadrature_modes[j + profile.mode_count]
    phase = np.exp(-1j * np.outer(xi, quad.nodes))
    weighted = quad.weights * mode
    if derivative:
        weighted = weighted * (-1j * quad.nodes)
    return phase @ weighted


def load_sampled_profile(path: Path, *, mode_count: int | None = None) -> PerturbationProfile:
    """Load a CSV with columns ``x,y,f`` describing a full uniform lattice."""

    path = Path(path)
    if not path.exists():
        raise ProfileLoadError(f"profile file not found: {path}")
    rows: list[tuple[float, float, float]] = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"x", "y", "f"} <= {name.strip() for name in reader.fieldnames}:
            raise ProfileLoadError("profile CSV must have columns x,y,f", details={"columns": reader.fieldnames})
        for lineno, record in enumerate(reader, start=2):
            try:
                rows.append((float(record["x"]), float(record["y"]), float(record["f"])))
            except (TypeError, ValueError) as exc:
                raise ProfileLoadError(f"unparseable row at line {lineno}", details={"line": lineno}) from exc
    if not rows:
        raise ProfileLoadError("profile CSV holds no samples")
    data = np.asarray(rows)
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    if x.size * y.size != data.shape[0]:
        raise ProfileLoadError(
            "samples do not form a complete lattice",
            details={"rows": data.shape[0], "nx": x.size, "ny": y.size},
        )
    values = np.full((x.size, y.size), np.nan)
    values[np.searchsorted(x, data[:, 0]), np.searchsorted(y, data[:, 1])] = data[:, 2]
    if np.isnan(values).any():
        raise ProfileLoadError("duplicate lattice points in profile CSV")
    return make_sampled(x, y, values, mode_count=mode_count)


def write_sampled_csv(path: Path, x: np.ndarray, y: np.ndarray, values: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write("x,y,f\n")
        for i, xv in enumerate(x):
            for l, yv in enumerate(y):
                handle.write(f"{format_float(xv)},{format_float(yv)},{format_float(values[i, l])}\n")
    return path


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class AdmissibilityReport:
    positive_volume: bool
    symmetric: bool
    volume: float
    x_symmetry_defect: float
    y_symmetry_defect: float


def check_admissibility(profile: PerturbationProfile) -> AdmissibilityReport:
    """Check ∫∫f > 0 and the evenness of f in x and y (report only)."""

    volume = fourier_transform(profile, 0, 0.0).real
    if profile.is_builtin:
        x = np.linspace(-profile.support_halfwidth, profile.support_halfwidth, 257)
        table = mode_table(profile, x)
        x_defect = float(np.max(np.abs(table - table[:, ::-1])))
        y_defect = float(np.max(np.abs(table - table[::-1, :])))
        scale = float(np.max(np.abs(table)))
        abs_volume = abs(volume)
        tol = BUILTIN_SYMMETRY_TOL
    else:
        x_defect, y_defect = _lattice_symmetry_defects(profile.samples)
        scale = float(np.max(np.abs(profile.samples)))
        # ∫∫|f| from the lattice (trapezoid in x, rectangle rule in y)
        hx = profile.x_lattice[1] - profile.x_lattice[0]
        weights_x = np.full(profile.x_lattice.size, hx)
        weights_x[[0, -1]] *= 0.5
        abs_volume = float(weights_x @ np.abs(profile.samples).sum(axis=1) * TWO_PI / profile.y_lattice.size)
        tol = 1e-10 * max(scale, 1e-300)
    positive = bool(volume > 1e-12 * max(abs_volume, 1e-300) and volume > 0.0)
    return AdmissibilityReport(
        positive_volume=positive,
        symmetric=bool(x_defect <= tol and y_defect <= tol),
        volume=float(volume),
        x_symmetry_defect=x_defect,
        y_symmetry_defect=y_defect,
    )


__all__ = [
    "AdmissibilityReport",
    "PerturbationProfile",
    "ProfileKind",
    "check_admissibility",
    "fourier_mode",
    "fourier_transform",
    "fourier_transform_derivative",
    "load_sampled_profile",
    "make_parabolic",
    "make_rectangular",
    "make_sampled",
    "mode_table",
    "write_sampled_csv",
]
