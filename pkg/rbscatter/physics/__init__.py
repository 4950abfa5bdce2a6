"""Scattering, resonance and trapped-mode computations."""
