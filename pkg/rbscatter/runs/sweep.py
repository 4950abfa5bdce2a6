"""Parameter sweeps over (ε, β, ν) grids with a deterministic CSV writer."""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from rbscatter.core.config import SweepConfig
from rbscatter.core.errors import NearResonanceError, ParameterDomainError, RBScatterError, RootFindingError
from rbscatter.core.hashing import HashResult, hash_bytes
from rbscatter.core.serialization import format_float
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import PerturbationProfile
from rbscatter.physics.resonance import breit_wigner, fano, perturbative_coeffs, solve_dispersion_root
from rbscatter.physics.scattering import solve_scattering
from rbscatter.physics.spectral_kernels import SpectralParams

LOGGER = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "epsilon",
    "beta",
    "nu",
    "delta",
    "re_R",
    "im_R",
    "re_T",
    "im_T",
    "abs_R2",
    "abs_T2",
    "bw_pred",
    "fano_pred",
    "unitarity_defect",
)


@dataclass(frozen=True)
class ResonanceAnchor:
    """Re ν₀ and the line-shape constants shared by one (ε, β) slice."""

    nu0_real: float
    Gamma: float
    q: float

    @classmethod
    def missing(cls) -> "ResonanceAnchor":
        return cls(math.nan, math.nan, math.nan)

    @property
    def available(self) -> bool:
        return math.isfinite(self.nu0_real)


@dataclass(frozen=True)
class SweepPoint:
    epsilon: float
    beta: float
    nu: float
    anchor: ResonanceAnchor

    @property
    def delta(self) -> float:
        return self.nu - self.anchor.nu0_real


@dataclass(frozen=True)
class SweepRow:
    point: SweepPoint
    R: complex | None
    T: complex | None
    bw_pred: float
    fano_pred: float
    error_code: str | None = None

    def values(self) -> list[float]:
        p = self.point
        if self.R is None or self.T is None:
            solved = [math.nan] * 6
            defect = math.nan
        else:
            abs_r2, abs_t2 = abs(self.R) ** 2, abs(self.T) ** 2
            solved = [self.R.real, self.R.imag, self.T.real, self.T.imag, abs_r2, abs_t2]
            defect = abs(abs_r2 + abs_t2 - 1.0)
        return [p.epsilon, p.beta, p.nu, p.delta, *solved, self.bw_pred, self.fano_pred, defect]


@dataclass(slots=True)
class SweepResult:
    rows: list[SweepRow]
    refused: int
    output_path: Path | None = None
    digest: HashResult | None = None


def resonance_anchor(epsilon: float, beta: float, profile: PerturbationProfile, disc: Discretization) -> ResonanceAnchor:
    """Resonance data at ``|β|``; ``β ↦ -β`` leaves ``Re ν₀``, ``Γ`` and ``q`` unchanged."""

    try:
        coeffs = perturbative_coeffs(abs(beta), profile)
        nu0 = solve_dispersion_root(epsilon, abs(beta), profile, disc)
    except RBScatterError as exc:
        LOGGER.warning("no resonance anchor at eps=%s beta=%s: %s", epsilon, beta, exc)
        return ResonanceAnchor.missing()
    return ResonanceAnchor(nu0_real=nu0.real, Gamma=coeffs.Gamma, q=coeffs.q)


def expand_grid(section: SweepConfig, profile: PerturbationProfile, disc: Discretization) -> list[SweepPoint]:
    """Points in row order: ε outermost, then β, ν innermost."""

    points: list[SweepPoint] = []
    for epsilon in section.epsilon.values():
        for beta in section.beta.values():
            anchor = resonance_anchor(epsilon, beta, profile, disc)
            if section.nu_mode == "delta" and not anchor.available:
                raise RootFindingError(
                    "a detuning sweep needs the resonance position",
                    details={"epsilon": epsilon, "beta": beta},
                )
            for value in section.nu.values():
                nu = anchor.nu0_real + value if section.nu_mode == "delta" else value
                if nu <= 0.0:
                    raise ParameterDomainError(
                        "detuning moves nu below zero",
                        details={"epsilon": epsilon, "beta": beta, "delta": value, "nu": nu},
                    )
                points.append(SweepPoint(epsilon=epsilon, beta=beta, nu=nu, anchor=anchor))
    return points


def _predictions(point: SweepPoint) -> tuple[float, float]:
    anchor = point.anchor
    if not anchor.available:
        return math.nan, math.nan
    try:
        bw = float(breit_wigner(point.delta, point.epsilon, anchor.Gamma))
        fa = float(fano(point.delta, point.epsilon, anchor.Gamma, anchor.q))
    except RBScatterError:
        return math.nan, math.nan
    return bw, fa


def evaluate_point(
    point: SweepPoint,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    guard_factor: float,
) -> SweepRow:
    bw, fa = _predictions(point)
    params = SpectralParams.create(point.epsilon, point.beta, point.nu)
    try:
        solution = solve_scattering(params, profile, disc, guard_factor=guard_factor)
    except NearResonanceError as exc:
        LOGGER.info("guard refused eps=%s beta=%s nu=%s", point.epsilon, point.beta, point.nu)
        return SweepRow(point=point, R=None, T=None, bw_pred=bw, fano_pred=fa, error_code=exc.code)
    return SweepRow(point=point, R=solution.R, T=solution.T, bw_pred=bw, fano_pred=fa)


def run_sweep(
    section: SweepConfig,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    threads: int = 1,
) -> SweepResult:
    """Evaluate every grid point; rows come back in grid order whatever the completion order."""

    points = expand_grid(section, profile, disc)
    LOGGER.info("sweep of %d points on %d worker(s)", len(points), threads)

    def work(point: SweepPoint) -> SweepRow:
        return evaluate_point(point, profile, disc, guard_factor=section.guard_factor)

    if threads <= 1:
        rows = [work(point) for point in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, points))
    refused = sum(1 for row in rows if row.error_code is not None)
    return SweepResult(rows=rows, refused=refused)


def render_sweep_csv(rows: Sequence[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([format_float(value, allow_nan=True) for value in row.values()])
    return buffer.getvalue()


def write_sweep_csv(result: SweepResult, path: Path) -> SweepResult:
    text = render_sweep_csv(result.rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    result.output_path = path
    result.digest = hash_bytes(text.encode("utf-8"))
    return result


__all__ = [
    "ResonanceAnchor",
    "SWEEP_COLUMNS",
    "SweepPoint",
    "SweepResult",
    "SweepRow",
    "evaluate_point",
    "expand_grid",
    "render_sweep_csv",
    "resonance_anchor",
    "run_sweep",
    "write_sweep_csv",
]
