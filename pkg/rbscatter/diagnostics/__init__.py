"""Determinism audits and the validation suite."""
