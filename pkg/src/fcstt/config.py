"""Experiment configuration: a versioned, strict schema loaded from YAML or JSON."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .models import FREE_FERMION_PRESETS, PRESETS

SCHEMA_VERSION = 1
_GRID_TOL = 1e-9


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelOverrides(_Strict):
    epsilon: Optional[float] = None
    u: Optional[float] = None
    beta: Optional[float] = None
    voltage: Optional[float] = None
    n_b: Optional[int] = Field(default=None, ge=1)
    spinful: Optional[bool] = None
    initial_state: Optional[str] = None


class ModelConfig(_Strict):
    preset: str = "resonant-level-small"
    overrides: ModelOverrides = ModelOverrides()
    backend: Literal["auto", "dense", "free-fermion"] = "auto"

    @field_validator("preset")
    @classmethod
    def _known(cls, v):
        if v not in PRESETS:
            raise ValueError(f"unknown preset {v!r}; known: {sorted(PRESETS)}")
        return v

    def resolved_backend(self) -> str:
        if self.backend != "auto":
            return self.backend
        return "free-fermion" if self.preset in FREE_FERMION_PRESETS else "dense"


class NoiseConfig(_Strict):
    sigma: float = Field(default=0.0, ge=0.0)
    seed: int = 0


class BasisConfig(_Strict):
    input: Literal["selfdual", "pauli"] = "selfdual"
    output: Literal["selfdual", "pauli"] = "selfdual"


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    model: ModelConfig = ModelConfig()
    lambdas: list[float] = [0.0, 0.01, -0.01, 0.02, -0.02, 0.3]
    dt: float = Field(default=0.02, gt=0.0)
    t_data: float = Field(default=8.0, gt=0.0)
    horizon: float = Field(default=8.0, gt=0.0)
    cutoffs: list[float] = [0.4, 0.8, 1.2]
    smoothing: int = Field(default=6, ge=0)
    fd_step: float = Field(default=1e-2, gt=0.0)
    fd_accuracy: Literal[2, 4] = 2
    tail_start: Optional[float] = None
    noise: NoiseConfig = NoiseConfig()
    basis: BasisConfig = BasisConfig()
    outputs: list[Literal["ttnorms", "sweep"]] = ["ttnorms", "sweep"]

    @staticmethod
    def _steps(x: float, dt: float, what: str) -> int:
        n = round(x / dt)
        if n < 1 or abs(n * dt - x) > _GRID_TOL * max(1.0, x):
            raise ValueError(f"{what}={x} is not a positive multiple of dt={dt}")
        return int(n)

    @model_validator(mode="after")
    def _grids(self):
        if not self.lambdas:
            raise ValueError("lambdas must not be empty")
        if len(set(self.lambdas)) != len(self.lambdas):
            raise ValueError("lambdas contain duplicates")
        self._steps(self.t_data, self.dt, "t_data")
        self._steps(self.horizon, self.dt, "horizon")
        for t_m in self.cutoffs:
            self._steps(t_m, self.dt, "cutoff")
            if t_m > self.t_data + _GRID_TOL:
                raise ValueError(f"cutoff {t_m} exceeds t_data {self.t_data}")
        return self

    @property
    def n_data(self) -> int:
        return self._steps(self.t_data, self.dt, "t_data")

    @property
    def n_horizon(self) -> int:
        return self._steps(self.horizon, self.dt, "horizon")

    def normalized_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def load_config(path, **updates) -> ExperimentConfig:
    """Read a YAML/JSON config; ``updates`` replace top-level fields (None is ignored)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(raw, **updates)


def config_from_dict(raw: dict, **updates) -> ExperimentConfig:
    raw = dict(raw)
    for key, value in updates.items():
        if value is None:
            continue
        if key == "seed":
            noise = dict(raw.get("noise") or {})
            noise["seed"] = value
            raw["noise"] = noise
        else:
            raw[key] = value
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
