"""Logging setup for the command-line entry point."""
from __future__ import annotations

import logging
import os
import sys

LOG_LEVEL = os.getenv("RBSCATTER_LOG_LEVEL", "WARNING")
LOG_FORMAT = "[%(name)s] %(levelname)s %(message)s"


def configure_logging(level: str | int | None = None) -> logging.Logger:
    """Install a single tagged stderr handler on the ``rbscatter`` logger."""

    resolved = level if level is not None else LOG_LEVEL
    if isinstance(resolved, str):
        resolved = logging.getLevelName(resolved.upper())
        if not isinstance(resolved, int):
            resolved = logging.WARNING
    logger = logging.getLogger("rbscatter")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(resolved)
    logger.propagate = False
    return logger


__all__ = ["LOG_FORMAT", "LOG_LEVEL", "configure_logging"]
