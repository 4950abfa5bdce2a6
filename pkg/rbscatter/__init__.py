"""rbscatter: quasiperiodic Helmholtz scattering by weak periodic perturbations."""

from __future__ import annotations

__version__ = "0.4.0"

__all__ = [
    "cli",
    "core",
    "diagnostics",
    "physics",
    "runs",
    "validation",
]
