"""Regression tests for canonical serialization of run records."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import pytest

from rbscatter.core.serialization import (
    canonical_json,
    canonical_payload_hash,
    format_float,
    normalize_payload,
)


def test_format_float_uses_seventeen_significant_digits() -> None:
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1.0 / 3.0)) == 1.0 / 3.0
    assert format_float(2.0) == "2.0"
    assert format_float(-0.0) == "0.0"


def test_format_float_nan_only_when_allowed() -> None:
    assert format_float(math.nan, allow_nan=True) == "nan"
    with pytest.raises(ValueError):
        format_float(math.nan)
    with pytest.raises(ValueError):
        format_float(math.inf, allow_nan=True)


def test_normalize_payload_splits_complex_and_sorts_keys() -> None:
    normalized = normalize_payload({"b": 1 + 2j, "a": np.float64(-0.0), "c": np.array([1.5, 2.5])})
    assert list(normalized) == ["a", "b", "c"]
    assert normalized["a"] == 0.0
    assert normalized["b"] == {"re": 1.0, "im": 2.0}
    assert normalized["c"] == [1.5, 2.5]


def test_normalize_payload_rejects_non_finite_float() -> None:
    with pytest.raises(ValueError):
        normalize_payload({"value": math.inf})


def test_dataclasses_serialize_without_private_fields() -> None:
    @dataclass
    class Record:
        value: float
        _cache: object = None

    text = canonical_json({"record": Record(value=0.5, _cache=object())})
    assert text == '{"record":{"value":0.5}}'


def test_canonical_json_is_stable_and_parseable() -> None:
    payload = {"nu": 0.75, "R": 0.25 - 0.5j, "flags": [True, None]}
    first = canonical_json(payload, indent=2)
    assert first == canonical_json(dict(reversed(list(payload.items()))), indent=2)
    parsed = json.loads(first)
    assert parsed["R"] == {"im": -0.5, "re": 0.25}
    assert canonical_payload_hash(payload) == canonical_payload_hash(parsed)
    assert len(canonical_payload_hash(payload)) == 64
