"""Experiment configuration: TOML file, flag overrides, env seed fallback.

Precedence per field: command-line flag > TOML value > CONRAD_SEED (seed
only) > built-in default.
"""

from __future__ import annotations

import os

try:
    import tomllib
except ModuleNotFoundError:  # 3.10: stdlib tomllib arrived in 3.11
    import tomli as tomllib

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .evaluation import ABLATIONS, CLASSIFIERS

ENV_SEED = "CONRAD_SEED"


@dataclass(frozen=True)
class ExperimentConfig:
    # paths
    annotations_dir: str | None = None
    cohort_dir: str | None = None
    radiomics_csv: str | None = None
    biomarkers_csv: str | None = None
    cnn_csv: str | None = None
    output_dir: str | None = None
    # experiment selection
    ablation: str | None = None
    classifier: str | None = None
    # determinism and folds
    seed: int = 0
    k_folds: int = 5
    stratified: bool = True
    nested: bool = False
    # preprocessing
    target_spacing: float = 1.0
    consensus_level: float = 0.5
    bin_width: float = 25.0
    # hyperparameter grids; lambda values are fractions of lambda_max
    grid_c: tuple[float, ...] = (0.1, 1.0, 10.0)
    grid_lambda: tuple[float, ...] = (0.5, 0.2, 0.1, 0.05, 0.02)
    n_trees: int = 200
    # execution
    jobs: int = 1
    # fixture generation
    n_nodules: int = 200
    cnn_width: int = 128

    def __post_init__(self) -> None:
        if self.ablation is not None and self.ablation not in ABLATIONS:
            raise ConfigError(
                f"unknown ablation {self.ablation!r}; "
                f"valid: {', '.join(sorted(ABLATIONS))}")
        if self.classifier is not None and self.classifier not in CLASSIFIERS:
            raise ConfigError(
                f"unknown classifier {self.classifier!r}; "
                f"valid: {', '.join(CLASSIFIERS)}")
        if self.k_folds < 2:
            raise ConfigError("k_folds must be at least 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.bin_width <= 0:
            raise ConfigError("bin_width must be positive")
        if self.target_spacing <= 0:
            raise ConfigError("target_spacing must be positive")
        if not 0 < self.consensus_level <= 1:
            raise ConfigError("consensus_level must be in (0, 1]")


_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}
_TUPLE_FIELDS = ("grid_c", "grid_lambda")


def load_toml(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    unknown = [k for k in doc if k not in _FIELD_TYPES]
    if unknown:
        raise ConfigError(f"unknown config key(s) in {path}: {', '.join(sorted(unknown))}")
    return doc


def resolve_config(toml_path: str | None, overrides: dict) -> ExperimentConfig:
    """Merge defaults, TOML, the env seed fallback, and flag overrides."""
    merged: dict = {}
    if toml_path is not None:
        merged.update(load_toml(toml_path))
    env_seed = os.environ.get(ENV_SEED)
    if "seed" not in merged and env_seed is not None:
        try:
            merged["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env_seed!r}")
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config field {key!r}")
        merged[key] = value
    for key in _TUPLE_FIELDS:
        if key in merged:
            merged[key] = tuple(float(v) for v in merged[key])
    return ExperimentConfig(**merged)


def require(config: ExperimentConfig, *names: str) -> None:
    """Fail with every missing field named, not just the first."""
    missing = [n for n in names if getattr(config, n) is None]
    if missing:
        raise ConfigError("missing required setting(s): " + ", ".join(missing))
