"""Write sampled perturbation profiles (CSV ``x,y,f``) for tests and demos."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from rbscatter.physics.perturbation import write_sampled_csv  # noqa: E402

SHAPES = ("rectangular", "parabolic", "gaussian")


def profile_values(shape: str, x: np.ndarray, y: np.ndarray, halfwidth: float) -> np.ndarray:
    """``f(x_i, y_l)``; every shape is even in x and y and has one y-harmonic."""

    xx, yy = np.meshgrid(x, y, indexing="ij")
    transverse = 1.0 + np.cos(yy)
    if shape == "rectangular":
        envelope = np.where(np.abs(xx) < halfwidth, 1.0, 0.5)
    elif shape == "parabolic":
        envelope = 1.0 - (xx / halfwidth) ** 2
    elif shape == "gaussian":
        envelope = np.exp(-4.0 * (xx / halfwidth) ** 2) - np.exp(-4.0)
    else:
        raise ValueError(f"unknown shape {shape!r}; choose one of {', '.join(SHAPES)}")
    return envelope * transverse


def generate_profile(output: Path, *, shape: str, halfwidth: float, nx: int, ny: int) -> Path:
    x = np.linspace(-halfwidth, halfwidth, nx)
    y = 2.0 * np.pi * np.arange(ny) / ny
    return write_sampled_csv(output, x, y, profile_values(shape, x, y, halfwidth))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="generate_profile")
    parser.add_argument("output")
    parser.add_argument("--shape", choices=SHAPES, default="parabolic")
    parser.add_argument("--halfwidth", type=float, default=2.0)
    parser.add_argument("--nx", type=int, default=65)
    parser.add_argument("--ny", type=int, default=8)
    args = parser.parse_args(argv)
    path = generate_profile(Path(args.output), shape=args.shape, halfwidth=args.halfwidth, nx=args.nx, ny=args.ny)
    print(f"profile written to {path}")
    return 0


if __name__ == "__main__":  # pragma: no cover - manual entry point
    raise SystemExit(main())
