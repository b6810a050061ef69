"""Run configuration: one YAML file covering features, augmentation, training,
model widths, grid options, and the evaluation protocol.

Every field has a default; unknown keys are rejected with their path so typos
fail loudly instead of silently using defaults. The SCENEFIT_CONFIG
environment variable supplies the config path when the CLI gets no --config.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .augment import AugmentParams
from .errors import SchemaError
from .features import FeatureParams
from .model import ModelDims
from .training import TrainConfig

ENV_CONFIG = "SCENEFIT_CONFIG"

SCORER_AUTOENCODER = "autoencoder"
SCORER_CLUSTER_MEAN = "cluster_mean"
SCORER_KDE = "kde"
SCORERS = (SCORER_AUTOENCODER, SCORER_CLUSTER_MEAN, SCORER_KDE)


@dataclass(frozen=True)
class GridConfig:
    cell_size: float = 0.1
    nms_radius: float | None = None
    max_support_height: float = 1.2

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise SchemaError("grid.cell_size must be positive")


@dataclass(frozen=True)
class EvalConfig:
    folds: int = 4
    val_fraction: float = 0.2
    top_n: int = 5
    scorer: str = SCORER_AUTOENCODER

    def __post_init__(self) -> None:
        if self.scorer not in SCORERS:
            raise SchemaError(f"eval.scorer must be one of {SCORERS}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    feature: FeatureParams = field(default_factory=FeatureParams)
    augment: AugmentParams = field(default_factory=AugmentParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    model: ModelDims = field(default_factory=ModelDims)
    grid: GridConfig = field(default_factory=GridConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy with the global seed pushed into every seeded sub-config."""
        return RunConfig(
            seed=seed,
            feature=self.feature,
            augment=_replace_dataclass(self.augment, {"seed": seed}),
            train=_replace_dataclass(self.train, {"seed": seed}),
            model=self.model,
            grid=self.grid,
            eval=self.eval,
        )


_SECTION_TYPES = {
    "feature": FeatureParams,
    "augment": AugmentParams,
    "train": TrainConfig,
    "grid": GridConfig,
    "eval": EvalConfig,
}

_TUPLE_FIELDS = {"init_hidden", "proj_hidden", "ae_hidden"}


def _replace_dataclass(obj, updates: dict):
    kwargs = {f.name: getattr(obj, f.name) for f in fields(obj)}
    kwargs.update(updates)
    return type(obj)(**kwargs)


def _build_section(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: expected a mapping")
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise SchemaError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _TUPLE_FIELDS:
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{path}: {e}") from e


def config_from_dict(data: dict) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SchemaError("config root must be a mapping")
    allowed = {"seed", "model"} | set(_SECTION_TYPES)
    unknown = set(data) - allowed
    if unknown:
        raise SchemaError(f"config: unknown keys {sorted(unknown)}")
    kwargs = {}
    if "seed" in data:
        if not isinstance(data["seed"], int):
            raise SchemaError("seed: expected an integer")
        kwargs["seed"] = data["seed"]
    if "model" in data:
        kwargs["model"] = _build_section(ModelDims, data["model"], "model")
    for name, cls in _SECTION_TYPES.items():
        if name in data:
            kwargs[name] = _build_section(cls, data[name], name)
    cfg = RunConfig(**kwargs)
    if "seed" in data:
        cfg = cfg.with_seed(data["seed"])
        # Explicit per-section seeds win over the global one.
        for section in ("augment", "train"):
            if section in data and isinstance(data[section], dict) \
                    and "seed" in data[section]:
                cfg = _replace_dataclass(cfg, {
                    section: _replace_dataclass(
                        getattr(cfg, section), {"seed": data[section]["seed"]})})
    return cfg


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a config file; falls back to $SCENEFIT_CONFIG, then to defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise SchemaError(f"cannot read config {path}: {e.strerror}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SchemaError(f"{path}: invalid YAML: {e}") from e
    try:
        return config_from_dict(data)
    except SchemaError as e:
        raise SchemaError(f"{path}: {e}") from e
