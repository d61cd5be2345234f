"""
Engine and experiment configuration.

EngineConfig carries the stopping-time constants; ExperimentConfig is the
validated form of a TOML experiment record plus CLI overrides.
"""

import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

SUITES = (
    "stats-oracles",
    "kernel-audit",
    "prop-cr",
    "sparse-mr",
    "sparse-spd-compare",
    "sobolev",
    "necessity-probe",
)


class EngineConfig(BaseModel):
    """Constants of the local stopping-time construction and the ring assembly"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    dim: int = Field(1, ge=1, le=2)
    lambda_n: Optional[float] = None
    target_eta: Optional[float] = None
    max_depth: int = Field(8, ge=1)
    selection_fraction: float = Field(0.5, gt=0.0, lt=1.0)
    stopping_slack: float = Field(1.0, ge=1.0)
    rings: int = Field(6, ge=1)
    tail_tolerance: float = Field(1e-2, gt=0.0)
    ring_cells: Optional[int] = Field(None, ge=4)

    @model_validator(mode="before")
    @classmethod
    def _derive_defaults(cls, data):
        if not isinstance(data, dict):
            return data
        data = {k: v for k, v in data.items() if v is not None}
        dim = data.get("dim", 1)
        data.setdefault("lambda_n", 2.0 ** (-dim - 3))
        data.setdefault("target_eta", 1.0 / (2.0 * (5.0 * math.sqrt(dim)) ** dim))
        return data

    @field_validator("lambda_n")
    @classmethod
    def _lambda_range(cls, v):
        if v is not None and not 0.0 < v < 1.0:
            raise ValueError("lambda_n must lie in (0, 1)")
        return v

    @field_validator("target_eta")
    @classmethod
    def _eta_range(cls, v):
        if v is not None and not 0.0 < v <= 1.0:
            raise ValueError("target_eta must lie in (0, 1]")
        return v

    @property
    def dilation_factor(self):
        return 5.0 * math.sqrt(self.dim)

    @classmethod
    def for_dim(cls, n, **overrides):
        return cls(dim=n, **overrides)


class CorpusMember(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    generator: str
    params: dict = Field(default_factory=dict)


class ProbeSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    radii: list[float] = Field(default_factory=lambda: [10.0, 20.0, 40.0, 80.0])
    cells: int = Field(1024, ge=16)
    plane_cells: int = Field(256, ge=16)
    margin: float = Field(2.5, gt=2.0)


class EngineOverrides(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lambda_n: Optional[float] = None
    target_eta: Optional[float] = None
    max_depth: Optional[int] = None
    selection_fraction: Optional[float] = None
    stopping_slack: Optional[float] = None
    rings: Optional[int] = None
    tail_tolerance: Optional[float] = None
    ring_cells: Optional[int] = None


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    operator: str = "hilbert"
    operators: list[str] = Field(default_factory=list)
    corpus: Union[str, list[CorpusMember]] = "default"
    grid: int = Field(4096, ge=8)
    dim: int = Field(1, ge=1, le=2)
    half_width: float = Field(2.0, gt=1.5)
    engine: EngineOverrides = Field(default_factory=EngineOverrides)
    out: str = "runs"
    seed: int = Field(42, ge=0, lt=2 ** 64)
    workers: Optional[int] = Field(None, ge=1)
    plugin_dir: Optional[Path] = None
    refine: bool = True
    oracle_pairs: int = Field(500, ge=1)
    audit_samples: int = Field(100_000, ge=1)
    scales: list[int] = Field(default_factory=lambda: list(range(-3, 5)))
    tail_tol: float = Field(1e-3, gt=0.0)
    plane_grid: int = Field(256, ge=16)
    poincare_cubes: int = Field(100, ge=1)
    riesz_points: int = Field(50, ge=1)
    probe: ProbeSettings = Field(default_factory=ProbeSettings)

    @field_validator("grid", "plane_grid")
    @classmethod
    def _power_of_two(cls, v):
        if v & (v - 1):
            raise ValueError("grid must be a power of two")
        return v

    def engine_config(self):
        overrides = self.engine.model_dump(exclude_none=True)
        return EngineConfig.for_dim(self.dim, **overrides)


def _field_path(error):
    return ".".join(str(p) for p in error["loc"]) or "config"


def load_config(path=None, overrides=None):
    """Read a TOML record (optional), apply overrides, validate."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"invalid TOML: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key.startswith("engine."):
            data.setdefault("engine", {})[key.split(".", 1)[1]] = value
        else:
            data[key] = value
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(_field_path(err), err["msg"]) from None
    try:
        cfg.engine_config()
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError("engine." + _field_path(err), err["msg"]) from None
    return cfg
