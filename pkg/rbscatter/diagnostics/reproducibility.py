"""Determinism auditor for sweep artifacts."""
from __future__ import annotations

from dataclasses import dataclass
from rbscatter.core.config import SweepConfig
from rbscatter.core.hashing import HashResult, hash_bytes
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import PerturbationProfile
from rbscatter.runs.sweep import render_sweep_csv, run_sweep


@dataclass(frozen=True)
class DeterminismReport:
    serial_hash: HashResult
    parallel_hash: HashResult
    rows: int

    @property
    def consistent(self) -> bool:
        return self.serial_hash.digest == self.parallel_hash.digest


def audit_determinism(
    section: SweepConfig,
    profile: PerturbationProfile,
    disc: Discretization,
    *,
    threads: int = 2,
) -> DeterminismReport:
    """Run the sweep serially and on ``threads`` workers and compare the CSV bytes."""

    serial = run_sweep(section, profile, disc, threads=1)
    parallel = run_sweep(section, profile, disc, threads=max(2, threads))
    return DeterminismReport(
        serial_hash=hash_bytes(render_sweep_csv(serial.rows).encode("utf-8")),
        parallel_hash=hash_bytes(render_sweep_csv(parallel.rows).encode("utf-8")),
        rows=len(serial.rows),
    )


__all__ = ["DeterminismReport", "audit_determinism"]
