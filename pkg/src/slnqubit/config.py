"""Experiment configuration: YAML in, validated dataclasses out."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import yaml

from .bath import CUTOFF_FAMILIES, BathSpec
from .model import SystemModel, TransmonSpec, diagonalize_transmon, ideal_qubit
from .noisegen import NoiseGrid

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "ModelConfig",
    "BathConfig",
    "GridConfig",
    "SamplingConfig",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
]

EXPERIMENTS = ("decay", "steady_sweep", "larmor", "gate", "noise_validate", "universal_check", "two_bath")
METHODS = ("SLED", "SLN", "LE")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ModelConfig:
    kind: str = "ideal_qubit"
    E_J_over_E_C: float = 50.0
    n_levels: int = 5
    charge_cutoff: int = 30

    def build(self) -> SystemModel:
        """System in units of its own qubit frequency."""
        if self.kind == "ideal_qubit":
            return ideal_qubit(1.0)
        raw = diagonalize_transmon(TransmonSpec(self.E_J_over_E_C, 1.0, self.n_levels, self.charge_cutoff))
        return SystemModel(raw.omega / raw.omega_q, raw.q_op, "transmon", meta=dict(raw.meta))


@dataclass
class BathConfig:
    kappa: float = 0.2
    omega_c: float = 50.0
    beta: float = 5.0
    cutoff: str = "drude2"

    def build(self, kappa: float | None = None) -> BathSpec:
        return BathSpec(self.kappa if kappa is None else kappa, self.omega_c, self.beta, 1.0, self.cutoff)


@dataclass
class GridConfig:
    h: float = 2.0**-7
    n_steps: int = 4096
    oversample: int = 2
    n_evolve: int | None = None

    def build(self, n_steps: int | None = None) -> NoiseGrid:
        return NoiseGrid(self.h, self.n_steps if n_steps is None else n_steps, self.oversample)


@dataclass
class SamplingConfig:
    n_samples: int = 1000
    seed: int = 0
    workers: int = 1
    chunk_size: int = 256


@dataclass
class ExperimentConfig:
    experiment: str
    model: ModelConfig = field(default_factory=ModelConfig)
    bath: BathConfig = field(default_factory=BathConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    method: str = "SLED"
    output: str = "results.csv"
    params: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.model.kind not in ("ideal_qubit", "transmon"):
            raise ConfigError("model.kind must be ideal_qubit or transmon")
        if self.model.kind == "transmon" and (self.model.E_J_over_E_C <= 0 or self.model.n_levels < 2):
            raise ConfigError("transmon needs E_J_over_E_C > 0 and n_levels >= 2")
        b = self.bath
        if b.kappa < 0 or b.omega_c <= 0 or b.beta <= 0:
            raise ConfigError("bath ratios must be positive (kappa may be zero)")
        if b.cutoff not in CUTOFF_FAMILIES:
            raise ConfigError(f"bath.cutoff must be one of {CUTOFF_FAMILIES}")
        g = self.grid
        if g.h <= 0 or g.n_steps < 2 or g.n_steps & (g.n_steps - 1) or g.oversample < 1:
            raise ConfigError("grid needs h > 0, n_steps a power of two and oversample >= 1")
        if g.n_evolve is not None and not 1 <= g.n_evolve <= g.n_steps:
            raise ConfigError("grid.n_evolve must lie in [1, n_steps]")
        s = self.sampling
        if s.n_samples < 1 or s.workers < 1 or s.chunk_size < 1:
            raise ConfigError("sampling.n_samples, workers and chunk_size must be positive")
        for key in _SWEEPS.get(self.experiment, ()):
            if key in self.params and not list(self.params[key]):
                raise ConfigError(f"params.{key} must not be empty")
        for key in _REQUIRED.get(self.experiment, ()):
            if key not in self.params:
                raise ConfigError(f"params.{key} is required for {self.experiment}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_SWEEPS = {"steady_sweep": ("kappas",), "gate": ("kappa_over_g", "methods"), "two_bath": ("sets",),
           "universal_check": ("times",)}
_REQUIRED = {"steady_sweep": ("kappas",), "two_bath": ("sets",)}


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(extra)}")
    return cls(**data)


def _float_or_inf(x):
    if isinstance(x, str) and x.lower() in ("inf", "infinity", ".inf"):
        return math.inf
    return x


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict) or "experiment" not in data:
        raise ConfigError("config must be a mapping with an 'experiment' key")
    extra = set(data) - {f.name for f in fields(ExperimentConfig)}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    bath = dict(data.get("bath") or {})
    if "beta" in bath:
        bath["beta"] = float(_float_or_inf(bath["beta"]))
    try:
        cfg = ExperimentConfig(
            experiment=data["experiment"],
            model=_section(ModelConfig, data.get("model"), "model"),
            bath=_section(BathConfig, bath, "bath"),
            grid=_section(GridConfig, data.get("grid"), "grid"),
            sampling=_section(SamplingConfig, data.get("sampling"), "sampling"),
            method=data.get("method", "SLED"),
            output=data.get("output", "results.csv"),
            params=dict(data.get("params") or {}),
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(yaml.safe_load(fh))
