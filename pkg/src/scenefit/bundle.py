"""Model bundles on disk: one directory per furniture group holding the
parameter container (params.bin + params.json) whose manifest carries the
group label, layer widths, feature thresholds, standardizer state, and any
training provenance the caller wants to record."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .features import FeatureParams, Standardizer
from .geometry import FurnitureGroup, Scene
from .model import GroupModel, ModelDims
from .nn.serialize import load_tensors, save_tensors

_STD_MEAN = "standardizer.mean"
_STD_STD = "standardizer.std"


def dataset_fingerprint(scenes: list[Scene]) -> str:
    """Stable digest of a corpus: scene ids plus object geometry."""
    h = hashlib.sha256()
    for scene in sorted(scenes, key=lambda s: s.id):
        h.update(scene.id.encode())
        for w in scene.walls:
            h.update(np.array([*w.start, *w.end]).tobytes())
        for o in sorted(scene.objects, key=lambda x: x.id):
            h.update(o.id.encode())
            h.update(o.group.label.encode())
            h.update(np.array([*o.bbox.min, *o.bbox.max]).tobytes())
    return h.hexdigest()


def save_group_model(model: GroupModel, bundle_dir: Path,
                     extra_metadata: dict | None = None) -> None:
    bundle_dir = Path(bundle_dir)
    bundle_dir.mkdir(parents=True, exist_ok=True)
    tensors = {name: t.data for name, t in model.named_parameters()}
    if model.standardizer is None:
        raise SchemaError("refusing to save a model with no fitted standardizer")
    tensors[_STD_MEAN] = model.standardizer.mean
    tensors[_STD_STD] = model.standardizer.std
    metadata = {
        "group": model.group.label,
        "dims": model.dims.to_dict(),
        "feature_params": {
            "rho_fraction": model.feature_params.rho_fraction,
            "support_tau": model.feature_params.support_tau,
            "rho_mode": model.feature_params.rho_mode,
        },
        "max_support_height": model.max_support_height,
    }
    if extra_metadata:
        metadata.update(extra_metadata)
    save_tensors(bundle_dir / "params", tensors, metadata=metadata)


def load_group_model(bundle_dir: Path) -> GroupModel:
    bundle_dir = Path(bundle_dir)
    tensors, metadata = load_tensors(bundle_dir / "params")
    try:
        group = FurnitureGroup.from_label(metadata["group"])
        dims = ModelDims.from_dict(metadata["dims"])
        fp = FeatureParams(**metadata["feature_params"])
        msh = float(metadata["max_support_height"])
    except (KeyError, TypeError) as e:
        raise SchemaError(f"bundle {bundle_dir}: bad metadata: {e}") from e
    model = GroupModel.create(group, seed=0, dims=dims, feature_params=fp,
                              max_support_height=msh)
    named = dict(model.named_parameters())
    expected = set(named) | {_STD_MEAN, _STD_STD}
    if set(tensors) != expected:
        missing = expected - set(tensors)
        surplus = set(tensors) - expected
        raise SchemaError(f"bundle {bundle_dir}: tensor set mismatch "
                          f"(missing {sorted(missing)}, surplus {sorted(surplus)})")
    for name, tensor in named.items():
        arr = tensors[name]
        if arr.shape != tensor.data.shape:
            raise SchemaError(f"bundle {bundle_dir}: {name} has shape {arr.shape}, "
                              f"expected {tensor.data.shape}")
        tensor.data = arr.copy()
    model.standardizer = Standardizer(mean=tensors[_STD_MEAN].copy(),
                                      std=tensors[_STD_STD].copy())
    return model


def save_model_bundle(models: dict[FurnitureGroup, GroupModel], out_dir: Path,
                      extra_metadata: dict | None = None) -> None:
    out_dir = Path(out_dir)
    for group, model in models.items():
        save_group_model(model, out_dir / group.label, extra_metadata)


def load_model_bundle(bundle_dir: Path) -> dict[FurnitureGroup, GroupModel]:
    """Every group subdirectory holding a parameter container."""
    bundle_dir = Path(bundle_dir)
    if not bundle_dir.is_dir():
        raise SchemaError(f"{bundle_dir} is not a directory")
    models = {}
    for group in FurnitureGroup:
        sub = bundle_dir / group.label
        if (sub / "params.json").exists():
            models[group] = load_group_model(sub)
    if not models:
        raise SchemaError(f"{bundle_dir} contains no group model bundles")
    return models


def bundle_manifest(bundle_dir: Path) -> dict:
    try:
        manifest = json.loads((Path(bundle_dir) / "params.json").read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"unreadable bundle manifest in {bundle_dir}: {e}") from e
    return manifest.get("metadata", {})
