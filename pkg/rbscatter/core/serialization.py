"""Canonical serialisation utilities for rbscatter records.

All helpers enforce deterministic encoding so that run records can be
hashed and diffed byte-for-byte across machines. Floats are printed with 17
significant digits (exact round trip), complex numbers are split into
``{"re", "im"}`` pairs and nested mappings are key-sorted recursively.
"""
from __future__ import annotations

from collections.abc import Mapping, Sequence
import dataclasses
from decimal import Decimal
from enum import Enum
import hashlib
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

FLOAT_DIGITS = 17


def format_float(value: float, *, allow_nan: bool = False) -> str:
    """Return ``value`` with 17 significant digits (``-0.0`` folds to ``0.0``)."""

    value = float(value)
    if not math.isfinite(value):
        if allow_nan and math.isnan(value):
            return "nan"
        raise ValueError("Float values must be finite for canonical serialisation")
    if value == 0.0:
        return "0.0"
    text = format(value, f".{FLOAT_DIGITS}g")
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def _normalize(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {
            str(key): _normalize(value[key])
            for key in sorted(value, key=lambda candidate: str(candidate))
        }
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            field.name: _normalize(getattr(value, field.name))
            for field in dataclasses.fields(value)
            if not field.name.startswith("_")
        }
    if isinstance(value, Enum):
        return _normalize(value.value)
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.ndarray):
        return [_normalize(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        return _normalize(value.item())
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, complex):
        return {"re": _normalize(value.real), "im": _normalize(value.imag)}
    if isinstance(value, Decimal):
        return _normalize(float(value))
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("Float values must be finite for canonical normalisation")
        return 0.0 if value == 0.0 else value
    if isinstance(value, Sequence) and not isinstance(value, (bytes, bytearray)):
        return [_normalize(item) for item in value]
    raise TypeError(f"Unsupported type for canonical serialisation: {type(value).__name__}")


def normalize_payload(payload: Any) -> Any:
    """Recursively convert ``payload`` into sorted JSON-compatible primitives."""

    return _normalize(payload)


def _encode(value: Any, indent: int | None, level: int) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if indent is None:
        item_sep, open_pad, close_pad, key_sep = ",", "", "", ":"
    else:
        pad = "\n" + " " * (indent * (level + 1))
        item_sep, open_pad, close_pad, key_sep = "," + pad, pad, "\n" + " " * (indent * level), ": "
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [json.dumps(key, ensure_ascii=False) + key_sep + _encode(value[key], indent, level + 1) for key in value]
        return "{" + open_pad + item_sep.join(items) + close_pad + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        return "[" + open_pad + item_sep.join(_encode(item, indent, level + 1) for item in value) + close_pad + "]"
    raise TypeError(f"Unsupported normalised type: {type(value).__name__}")


def canonical_json(payload: Any, *, indent: int | None = None) -> str:
    """Return deterministic JSON for ``payload`` with 17-digit floats."""

    return _encode(_normalize(payload), indent, 0)


def canonical_payload_hash(payload: Any) -> str:
    """Hash ``payload`` after canonical normalisation."""

    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def canonical_serialize(obj: Any) -> bytes:
    """Return canonical UTF-8 bytes for ``obj`` (compact form)."""

    return canonical_json(obj).encode("utf-8")


__all__ = [
    "FLOAT_DIGITS",
    "canonical_json",
    "canonical_payload_hash",
    "canonical_serialize",
    "format_float",
    "normalize_payload",
]
