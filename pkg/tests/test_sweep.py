from __future__ import annotations

import math
from pathlib import Path

import pytest

from rbscatter.core.config import RangeConfig, SweepConfig
from rbscatter.core.errors import ParameterDomainError
from rbscatter.core.hashing import hash_bytes
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import make_parabolic
from rbscatter.physics.resonance import solve_dispersion_root
from rbscatter.runs.sweep import (
    SWEEP_COLUMNS,
    expand_grid,
    render_sweep_csv,
    run_sweep,
    write_sweep_csv,
)

PROFILE = make_parabolic(2.0)
DISC = Discretization(n_modes=4, grid_points=64)


def _section(**changes: object) -> SweepConfig:
    base = {
        "epsilon": RangeConfig(start=0.01, stop=0.01),
        "beta": RangeConfig(start=0.25, stop=0.25),
        "nu": RangeConfig(start=0.5, stop=3.5, num=3),
    }
    base.update(changes)
    return SweepConfig(**base)


def test_grid_order_and_csv_layout() -> None:
    section = _section(beta=RangeConfig(start=-0.25, stop=0.25, num=2))
    points = expand_grid(section, PROFILE, DISC)
    assert [(p.beta, p.nu) for p in points] == [
        (-0.25, 0.5), (-0.25, 2.0), (-0.25, 3.5), (0.25, 0.5), (0.25, 2.0), (0.25, 3.5),
    ]
    assert points[0].anchor == points[3].anchor

    result = run_sweep(section, PROFILE, DISC)
    assert result.refused == 0
    lines = render_sweep_csv(result.rows).splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 7
    for row in result.rows:
        values = dict(zip(SWEEP_COLUMNS, row.values()))
        assert values["unitarity_defect"] < 1e-8
        assert values["abs_R2"] + values["abs_T2"] == pytest.approx(1.0)
        assert math.isfinite(values["bw_pred"])
    mirrored = dict(zip(SWEEP_COLUMNS, result.rows[0].values()))
    direct = dict(zip(SWEEP_COLUMNS, result.rows[3].values()))
    assert mirrored["abs_R2"] == pytest.approx(direct["abs_R2"], abs=1e-14)


def test_threaded_sweep_matches_serial() -> None:
    section = _section()
    serial = render_sweep_csv(run_sweep(section, PROFILE, DISC).rows)
    threaded = render_sweep_csv(run_sweep(section, PROFILE, DISC, threads=2).rows)
    assert serial == threaded


def test_detuning_sweep_is_centred_on_the_resonance() -> None:
    section = _section(nu=RangeConfig(start=-0.01, stop=0.01, num=3), nu_mode="delta")
    result = run_sweep(section, PROFILE, DISC)
    nu0 = solve_dispersion_root(0.01, 0.25, PROFILE, DISC)
    centre = dict(zip(SWEEP_COLUMNS, result.rows[1].values()))
    assert centre["nu"] == pytest.approx(nu0.real)
    assert centre["delta"] == pytest.approx(0.0, abs=1e-15)
    assert centre["bw_pred"] == pytest.approx(1.0)
    assert [row.point.delta for row in result.rows] == pytest.approx([-0.01, 0.0, 0.01])


def test_detuning_below_zero_frequency_is_refused() -> None:
    section = _section(nu=RangeConfig(start=-2.0, stop=0.0, num=2), nu_mode="delta")
    with pytest.raises(ParameterDomainError):
        expand_grid(section, PROFILE, DISC)


def test_guarded_points_become_nan_rows() -> None:
    section = _section(nu=RangeConfig(start=0.75, stop=0.75), guard_factor=10.0)
    result = run_sweep(section, PROFILE, DISC)
    assert result.refused == 1
    assert result.rows[0].error_code == "NEAR_RESONANCE"
    fields = render_sweep_csv(result.rows).splitlines()[1].split(",")
    assert fields[SWEEP_COLUMNS.index("re_R")] == "nan"
    assert fields[SWEEP_COLUMNS.index("unitarity_defect")] == "nan"
    assert fields[SWEEP_COLUMNS.index("nu")] == "0.75"


def test_written_csv_digest_matches_file(tmp_path: Path) -> None:
    result = write_sweep_csv(run_sweep(_section(), PROFILE, DISC), tmp_path / "out" / "sweep.csv")
    assert result.output_path == tmp_path / "out" / "sweep.csv"
    assert result.digest is not None
    assert result.digest.digest == hash_bytes(result.output_path.read_bytes()).digest
