"""Deterministic hashing of run artifacts and records."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any

from rbscatter.core.serialization import canonical_serialize


@dataclass(frozen=True)
class HashResult:
    algorithm: str
    digest: str
    bytes_processed: int


class DeterministicHasher:
    """Streaming hasher fed with bytes or canonically serialised payloads."""

    def __init__(self, algorithm: str = "sha256") -> None:
        self.algorithm = algorithm.lower()
        try:
            self._hasher = hashlib.new(self.algorithm)
        except ValueError as exc:
            raise ValueError(f"Unsupported hash algorithm '{algorithm}'") from exc
        self._bytes = 0

    def update(self, data: bytes) -> "DeterministicHasher":
        if not isinstance(data, (bytes, bytearray)):
            raise TypeError("Hasher update expects bytes-like input")
        self._hasher.update(data)
        self._bytes += len(data)
        return self

    def update_payload(self, payload: Any) -> "DeterministicHasher":
        return self.update(canonical_serialize(payload))

    def digest(self) -> HashResult:
        return HashResult(
            algorithm=self.algorithm,
            digest=self._hasher.hexdigest(),
            bytes_processed=self._bytes,
        )

    def hexdigest(self) -> str:
        return self._hasher.hexdigest()


def hash_bytes(data: bytes) -> HashResult:
    return DeterministicHasher().update(data).digest()


__all__ = ["DeterministicHasher", "HashResult", "hash_bytes"]
