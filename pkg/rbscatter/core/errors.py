"""Structured error utilities for rbscatter subsystems.

Every failure surfaced by the library carries a stable ``code`` and a
``details`` mapping with the numbers that explain it (residuals, traces,
the offending parameter). The CLI maps codes onto process exit codes.
"""
from __future__ import annotations

from typing import Mapping

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_CONSISTENCY = 4


class RBScatterError(RuntimeError):
    """Base class for structured rbscatter errors with stable codes."""

    __slots__ = ("code", "message", "details")
    exit_code = EXIT_NUMERICAL

    def __init__(self, *, code: str, message: str, details: Mapping[str, object] | None = None) -> None:
        self.code = code
        self.message = message
        self.details = details
        super().__init__(f"[{self.code}] {self.message}")


class ConfigError(RBScatterError):
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="CONFIG", message=message, details=details)


class ParameterDomainError(RBScatterError):
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="PARAM_DOMAIN", message=message, details=details)


class ModeRangeError(RBScatterError):
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="MODE_RANGE", message=message, details=details)


class ProfileLoadError(RBScatterError):
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="PROFILE_LOAD", message=message, details=details)


class DiscretizationError(RBScatterError):
    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="DISCRETIZATION", message=message, details=details)


class NearResonanceError(RBScatterError):
    """Raised when μ − εγF is too small for the scattering formulas."""

    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="NEAR_RESONANCE", message=message, details=details)


class RootFindingError(RBScatterError):
    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="ROOT_FAILURE", message=message, details=details)


class SingularPointError(RBScatterError):
    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="SINGULAR_POINT", message=message, details=details)


class DegenerateResonanceError(RBScatterError):
    """Line shapes are undefined when the width parameter vanishes."""

    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="DEGENERATE_RESONANCE", message=message, details=details)


class TheoryConsistencyError(RBScatterError):
    exit_code = EXIT_CONSISTENCY

    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="THEORY_CONSISTENCY", message=message, details=details)


class ReproducibilityError(RBScatterError):
    exit_code = EXIT_CONSISTENCY

    def __init__(self, message: str, *, details: Mapping[str, object] | None = None):
        super().__init__(code="REPRO", message=message, details=details)


def classify_failure(error: Exception) -> dict[str, object]:
    if isinstance(error, RBScatterError):
        return {
            "code": error.code,
            "message": error.message,
            "details": dict(error.details or {}),
            "exit_code": error.exit_code,
        }
    return {"code": "GENERIC", "message": str(error), "details": {}, "exit_code": EXIT_NUMERICAL}


__all__ = [
    "EXIT_CONSISTENCY",
    "EXIT_NUMERICAL",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "ConfigError",
    "DegenerateResonanceError",
    "DiscretizationError",
    "ModeRangeError",
    "NearResonanceError",
    "ParameterDomainError",
    "ProfileLoadError",
    "RBScatterError",
    "ReproducibilityError",
    "RootFindingError",
    "SingularPointError",
    "TheoryConsistencyError",
    "classify_failure",
]
