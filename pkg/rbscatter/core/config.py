"""Run configuration: one JSON document validated by pydantic."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from rbscatter.core.errors import ConfigError
from rbscatter.core.serialization import canonical_payload_hash
from rbscatter.physics.modal_system import Discretization
from rbscatter.physics.perturbation import (
    PerturbationProfile,
    load_sampled_profile,
    make_parabolic,
    make_rectangular,
)

DEFAULT_THREADS = int(os.getenv("RBSCATTER_THREADS", str(os.cpu_count() or 1)))
EPSILON_MAX = 0.1


def _check_beta(value: float) -> float:
    if not (-0.5 < value < 0.5) or value == 0.0:
        raise ValueError("beta must lie in (-1/2, 1/2) without 0")
    return value


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PerturbationConfig(_Section):
    kind: Literal["rectangular", "parabolic", "sampled"] = "parabolic"
    a: float | None = 2.0
    path: str | None = None
    mode_count: int | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def check_source(self) -> "PerturbationConfig":
        if self.kind == "sampled":
            if not self.path:
                raise ValueError("sampled perturbations need a path")
        elif self.a is None or not self.a > 0:
            raise ValueError("builtin perturbations need a > 0")
        return self


class DiscretizationConfig(_Section):
    n_modes: int = Field(default=8, ge=1)
    grid_points: int = Field(default=128, ge=32)
    panel_order: int = Field(default=8, ge=2)
    sub_order: int = Field(default=16, ge=2)
    quadrature: Literal["composite-gauss-legendre"] = "composite-gauss-legendre"
    residual_tol: float = Field(default=1e-10, gt=0)


class RangeConfig(_Section):
    """``num`` points from ``start`` to ``stop`` inclusive."""

    start: float
    stop: float
    num: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def check_single(self) -> "RangeConfig":
        if self.num == 1 and self.start != self.stop:
            raise ValueError("a single-point range needs start == stop")
        return self

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.num)]


class ScatterConfig(_Section):
    epsilon: float = Field(default=0.01, ge=0.0, le=EPSILON_MAX)
    beta: float = 0.25
    nu: float = Field(default=1.0, gt=0.0)
    guard_factor: float = Field(default=1e-3, ge=0.0)

    @field_validator("beta")
    @classmethod
    def check_beta(cls, value: float) -> float:
        return _check_beta(value)


class SweepConfig(_Section):
    epsilon: RangeConfig = RangeConfig(start=0.01, stop=0.01)
    beta: RangeConfig = RangeConfig(start=0.25, stop=0.25)
    nu: RangeConfig = RangeConfig(start=0.2, stop=4.2, num=21)
    nu_mode: Literal["absolute", "delta"] = "absolute"
    guard_factor: float = Field(default=1e-3, ge=0.0)

    @model_validator(mode="after")
    def check_ranges(self) -> "SweepConfig":
        for eps in self.epsilon.values():
            if not 0.0 < eps <= EPSILON_MAX:
                raise ValueError(f"sweep epsilon values must lie in (0, {EPSILON_MAX}]")
        for beta in self.beta.values():
            _check_beta(beta)
        if self.nu_mode == "absolute" and min(self.nu.values()) <= 0.0:
            raise ValueError("absolute sweep nu values must be positive")
        return self


class ResonanceConfig(_Section):
    epsilon: float = Field(default=0.01, gt=0.0, le=EPSILON_MAX)
    beta: float = Field(default=0.25, gt=0.0, lt=0.5)
    with_zeros: bool = True


class TrappedConfig(_Section):
    epsilon: float = Field(default=0.01, gt=0.0, le=EPSILON_MAX)
    beta00: float | None = Field(default=None, gt=0.0, lt=0.5)
    mode_points: int = Field(default=201, ge=3)
    mode_halfwidth: float | None = Field(default=None, gt=0.0)


class LociConfig(_Section):
    epsilon: float = Field(default=0.01, gt=0.0, le=EPSILON_MAX)
    beta00: float | None = Field(default=None, gt=0.0, lt=0.5)
    beta: RangeConfig | None = None
    nu: RangeConfig | None = None
    beta_span: float = Field(default=0.01, gt=0.0)
    nu_span: float = Field(default=0.5, gt=0.0)
    points: int = Field(default=11, ge=2)


class ValidateConfig(_Section):
    epsilon: list[float] = [0.01]
    beta: list[float] = [0.25]
    nu: RangeConfig = RangeConfig(start=0.5, stop=4.5, num=5)
    oracle_points: int = Field(default=3, ge=0)
    checks: list[
        Literal["unitarity", "symmetry", "routes", "oracle", "lagrange", "determinism"]
    ] = ["unitarity", "symmetry", "routes", "oracle", "lagrange", "determinism"]

    @field_validator("epsilon")
    @classmethod
    def check_epsilon(cls, values: list[float]) -> list[float]:
        if not values:
            raise ValueError("at least one epsilon is required")
        if any(not 0.0 < v <= EPSILON_MAX for v in values):
            raise ValueError(f"epsilon values must lie in (0, {EPSILON_MAX}]")
        return values

    @field_validator("beta")
    @classmethod
    def check_betas(cls, values: list[float]) -> list[float]:
        if not values:
            raise ValueError("at least one beta is required")
        return [_check_beta(v) for v in values]

    @field_validator("nu")
    @classmethod
    def check_nu(cls, value: RangeConfig) -> RangeConfig:
        if min(value.values()) <= 0.0:
            raise ValueError("nu values must be positive")
        return value


class ToleranceConfig(_Section):
    unitarity: float = Field(default=1e-8, gt=0)
    symmetry: float = Field(default=1e-9, gt=0)
    routes: float = Field(default=1e-10, gt=0)
    oracle: float = Field(default=1e-6, gt=0)
    lagrange: float = Field(default=1e-6, gt=0)


class OutputConfig(_Section):
    path: str | None = None
    mode_csv: str | None = None


class RunConfig(_Section):
    perturbation: PerturbationConfig = PerturbationConfig()
    discretization: DiscretizationConfig = DiscretizationConfig()
    scatter: ScatterConfig = ScatterConfig()
    sweep: SweepConfig = SweepConfig()
    resonance: ResonanceConfig = ResonanceConfig()
    trapped: TrappedConfig = TrappedConfig()
    loci: LociConfig = LociConfig()
    validate_: ValidateConfig = Field(default=ValidateConfig(), alias="validate")
    tolerances: ToleranceConfig = ToleranceConfig()
    output: OutputConfig = OutputConfig()
    threads: int | None = Field(default=None, ge=1)

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    @property
    def validation(self) -> ValidateConfig:
        return self.validate_


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(document: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply ``a.b.c=value`` assignments to a raw config document."""

    result = json.loads(json.dumps(document))
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(
                "overrides must look like key=value",
                details={"errors": [{"field": item, "message": "missing '='"}]},
            )
        parts = key.strip().split(".")
        target = result
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(
                    f"cannot descend into {part!r}",
                    details={"errors": [{"field": key, "message": "not a section"}]},
                )
            target = node
        target[parts[-1]] = _parse_value(raw)
    return result


def _field_path(location: Sequence[object]) -> str:
    return ".".join(str(part) for part in location) or "<root>"


def parse_config(document: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        errors = [{"field": _field_path(err["loc"]), "message": err["msg"]} for err in exc.errors()]
        raise ConfigError("invalid configuration", details={"errors": errors}) from exc


def _merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Path | str | None = None, overrides: Sequence[str] = ()) -> RunConfig:
    document: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        try:
            document = json.loads(config_path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {config_path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                "config file is not valid JSON",
                details={"errors": [{"field": "<root>", "message": f"line {exc.lineno}: {exc.msg}"}]},
            ) from exc
        if not isinstance(document, dict):
            raise ConfigError("config document must be a JSON object")
    # partial sections fall back to the defaults key by key
    document = _merge(RunConfig().model_dump(mode="json", by_alias=True), document)
    return parse_config(apply_overrides(document, overrides))


def effective_config(config: RunConfig) -> dict[str, Any]:
    return config.model_dump(mode="json", by_alias=True)


def config_digest(config: RunConfig) -> str:
    return canonical_payload_hash(effective_config(config))


def resolve_threads(config: RunConfig, requested: int | None = None) -> int:
    threads = requested if requested is not None else config.threads
    if threads is None:
        threads = DEFAULT_THREADS
    if threads < 1:
        raise ConfigError("thread count must be positive", details={"errors": [{"field": "threads", "message": "must be >= 1"}]})
    return threads


def build_profile(section: PerturbationConfig) -> PerturbationProfile:
    if section.kind == "sampled":
        return load_sampled_profile(Path(section.path), mode_count=section.mode_count)
    if section.kind == "rectangular":
        return make_rectangular(float(section.a))
    return make_parabolic(float(section.a))


def build_discretization(section: DiscretizationConfig, profile: PerturbationProfile | None = None) -> Discretization:
    disc = Discretization(
        n_modes=section.n_modes,
        grid_points=section.grid_points,
        panel_order=section.panel_order,
        sub_order=section.sub_order,
        quadrature=section.quadrature,
        residual_tol=section.residual_tol,
    )
    if profile is not None:
        disc.check(profile)
    return disc


__all__ = [
    "DEFAULT_THREADS",
    "DiscretizationConfig",
    "LociConfig",
    "OutputConfig",
    "PerturbationConfig",
    "RangeConfig",
    "ResonanceConfig",
    "RunConfig",
    "ScatterConfig",
    "SweepConfig",
    "ToleranceConfig",
    "TrappedConfig",
    "ValidateConfig",
    "apply_overrides",
    "build_discretization",
    "build_profile",
    "config_digest",
    "effective_config",
    "load_config",
    "parse_config",
    "resolve_threads",
]
