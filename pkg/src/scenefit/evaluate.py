"""Grid evaluation: probability maps, top-k proposals, and the object-removal
experiment with k-fold cross validation.

The removal experiment deletes each object of the group from every validation
room, asks a scorer where that object should go, and reports the distance from
the true center to the top-1 proposal and to the best of the top-5.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .errors import GeometryError, TrainingError
from .geometry import FurnitureGroup, Scene, grid_mask_in_polygon
from .model import GroupModel
from .nn.serialize import atomic_write_bytes, atomic_write_text

log = logging.getLogger(__name__)


class PlacementScorer(Protocol):
    """Anything that can score candidate centers for an object placement."""

    def score_points(self, scene: Scene, group: FurnitureGroup,
                     dims: tuple[float, float, float],
                     centers: np.ndarray) -> np.ndarray: ...


class ModelScorer:
    """Scores placements with a trained group model's plausibility."""

    def __init__(self, model: GroupModel):
        self.model = model

    def score_points(self, scene, group, dims, centers):
        if group is not self.model.group:
            raise TrainingError(
                f"scorer holds a {self.model.group.label} model, asked for {group.label}")
        return self.model.score_placements(scene, dims, centers)


class UniformRandomScorer:
    """Seeded uniform-noise baseline; deterministic per (scene, group)."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def score_points(self, scene, group, dims, centers):
        digest = hashlib.sha256(f"{scene.id}/{group.label}".encode()).digest()
        rng = np.random.default_rng(np.random.SeedSequence(
            [self.seed, int.from_bytes(digest[:8], "big")]))
        return rng.uniform(0.0, 1.0, size=len(centers))


@dataclass
class PlacementMap:
    """Plausibility over a room grid. probs is (ny, nx); cells outside the
    floor polygon are masked and hold 0."""

    origin: tuple[float, float]
    cell_size: float
    probs: np.ndarray
    mask: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def cell_center(self, iy: int, ix: int) -> tuple[float, float]:
        return (self.origin[0] + (ix + 0.5) * self.cell_size,
                self.origin[1] + (iy + 0.5) * self.cell_size)

    def in_mask_points(self) -> np.ndarray:
        """(n, 3) array of x, y, prob for every in-mask cell, row-major."""
        iy, ix = np.nonzero(self.mask)
        xs = self.origin[0] + (ix + 0.5) * self.cell_size
        ys = self.origin[1] + (iy + 0.5) * self.cell_size
        return np.column_stack([xs, ys, self.probs[iy, ix]])


def probability_map(scorer: PlacementScorer, scene: Scene, group: FurnitureGroup,
                    dims: tuple[float, float, float],
                    cell_size: float = 0.1) -> PlacementMap:
    """Score a grid of candidate centers over the room's bounding rectangle."""
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    minx, miny, maxx, maxy = scene.bounds
    nx = max(1, int(math.ceil((maxx - minx) / cell_size)))
    ny = max(1, int(math.ceil((maxy - miny) / cell_size)))
    xs = minx + (np.arange(nx) + 0.5) * cell_size
    ys = miny + (np.arange(ny) + 0.5) * cell_size
    mask = grid_mask_in_polygon(xs, ys, scene.floor_polygon)
    probs = np.zeros((ny, nx))
    iy, ix = np.nonzero(mask)
    if len(iy):
        centers = np.column_stack([xs[ix], ys[iy]])
        probs[iy, ix] = scorer.score_points(scene, group, dims, centers)
    return PlacementMap(origin=(minx, miny), cell_size=cell_size,
                        probs=probs, mask=mask)


def top_k(pmap: PlacementMap, k: int, nms_radius: float) -> list[tuple[float, float, float]]:
    """Greedy top-k (x, y, prob) by descending probability with spatial
    suppression; ties break row-major."""
    if k < 1:
        raise ValueError("k must be >= 1")
    iy, ix = np.nonzero(pmap.mask)
    if len(iy) == 0:
        raise GeometryError("placement map has an empty mask")
    probs = pmap.probs[iy, ix]
    order = np.lexsort((ix, iy, -probs))
    chosen: list[tuple[float, float, float]] = []
    for idx in order:
        x, y = pmap.cell_center(int(iy[idx]), int(ix[idx]))
        if any((x - cx) ** 2 + (y - cy) ** 2 < nms_radius ** 2
               for cx, cy, _ in chosen):
            continue
        chosen.append((x, y, float(probs[idx])))
        if len(chosen) == k:
            break
    return chosen


# ---------------------------------------------------------------------------
# Object-removal experiment
# ---------------------------------------------------------------------------

TrainFn = Callable[[list[Scene], FurnitureGroup], PlacementScorer]


@dataclass
class GroupEval:
    group: str
    top1_mean: float
    top5_mean: float
    count: int
    per_fold: list[dict] = field(default_factory=list)


@dataclass
class EvalReport:
    groups: dict[str, GroupEval]
    folds: int
    val_fraction: float
    cell_size: float

    def as_dict(self) -> dict:
        return {
            "folds": self.folds,
            "val_fraction": self.val_fraction,
            "cell_size": self.cell_size,
            "groups": {
                name: {
                    "top1_mean": g.top1_mean,
                    "top5_mean": g.top5_mean,
                    "count": g.count,
                    "per_fold": g.per_fold,
                }
                for name, g in self.groups.items()
            },
        }

    def table(self) -> str:
        lines = [f"{'Group':<10} {'T1':>8} {'T5':>8} {'N':>6}"]
        lines.append("-" * 34)
        for name in sorted(self.groups):
            g = self.groups[name]
            lines.append(f"{name:<10} {g.top1_mean:>8.3f} {g.top5_mean:>8.3f} "
                         f"{g.count:>6d}")
        return "\n".join(lines) + "\n"


def fold_partition(n: int, folds: int, val_fraction: float,
                   rng: np.random.Generator) -> list[np.ndarray]:
    """Disjoint validation index sets: one shuffled pass, each fold taking the
    next val_fraction slice."""
    if folds < 1 or not 0.0 < val_fraction < 1.0:
        raise ValueError("need folds >= 1 and val_fraction in (0,1)")
    if folds * val_fraction > 1.0 + 1e-9:
        raise ValueError("folds * val_fraction must not exceed 1")
    m = max(1, int(round(n * val_fraction)))
    if folds * m > n:
        raise ValueError(f"cannot carve {folds} disjoint folds of {m} rooms from {n}")
    order = rng.permutation(n)
    return [order[i * m:(i + 1) * m] for i in range(folds)]


def removal_experiment(scenes: list[Scene], groups: list[FurnitureGroup],
                       train_fn: TrainFn, folds: int = 4,
                       val_fraction: float = 0.2, cell_size: float = 0.1,
                       nms_radius: float | None = None, top_n: int = 5,
                       seed: int = 0) -> EvalReport:
    """The observed-object relocation protocol.

    Per fold: train on the training split, then for every validation room and
    every object of each requested group, delete the object, build the
    probability map for its dimensions, and measure top-1 / best-of-top-5
    distance to the true center. A group absent from every validation fold is
    skipped with a warning.
    """
    rng = np.random.default_rng(seed)
    val_folds = fold_partition(len(scenes), folds, val_fraction, rng)

    errors: dict[str, list[dict]] = {g.label: [] for g in groups}
    for fold_idx, val_ids in enumerate(val_folds):
        val_set = set(int(i) for i in val_ids)
        train_scenes = [s for i, s in enumerate(scenes) if i not in val_set]
        val_scenes = [scenes[i] for i in val_ids]
        for group in groups:
            if not any(s.objects_of(group) for s in val_scenes):
                continue
            scorer = train_fn(train_scenes, group)
            t1s, t5s = [], []
            for scene in val_scenes:
                for o in scene.objects_of(group):
                    context = scene.without(o.id)
                    dims = (o.bbox.length, o.bbox.width, o.bbox.height)
                    radius = nms_radius if nms_radius is not None \
                        else math.hypot(dims[0], dims[1]) / 2.0
                    pmap = probability_map(scorer, context, group, dims, cell_size)
                    proposals = top_k(pmap, top_n, radius)
                    tx, ty = o.bbox.centroid_xy
                    dists = [math.hypot(x - tx, y - ty) for x, y, _ in proposals]
                    t1s.append(dists[0])
                    t5s.append(min(dists))
            if t1s:
                errors[group.label].append({
                    "fold": fold_idx,
                    "top1_mean": float(np.mean(t1s)),
                    "top5_mean": float(np.mean(t5s)),
                    "count": len(t1s),
                })

    report_groups = {}
    for group in groups:
        per_fold = errors[group.label]
        if not per_fold:
            log.warning("group %s absent from every validation fold; skipped",
                        group.label)
            continue
        total = sum(f["count"] for f in per_fold)
        report_groups[group.label] = GroupEval(
            group=group.label,
            top1_mean=float(sum(f["top1_mean"] * f["count"] for f in per_fold) / total),
            top5_mean=float(sum(f["top5_mean"] * f["count"] for f in per_fold) / total),
            count=total,
            per_fold=per_fold,
        )
    return EvalReport(groups=report_groups, folds=folds,
                      val_fraction=val_fraction, cell_size=cell_size)


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def map_to_csv(pmap: PlacementMap, path: Path) -> None:
    """x, y, prob rows for every in-mask cell."""
    rows = pmap.in_mask_points()
    lines = ["x,y,prob"]
    for x, y, p in rows:
        lines.append(f"{float(x)!r},{float(y)!r},{float(p)!r}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def map_to_pgm(pmap: PlacementMap, path: Path) -> None:
    """16-bit binary PGM; probabilities scale to 0..65535, masked cells are 0."""
    scaled = np.zeros(pmap.shape, dtype=">u2")
    vals = np.clip(np.round(pmap.probs * 65535.0), 0, 65535)
    scaled[pmap.mask] = vals[pmap.mask].astype(">u2")
    ny, nx = pmap.shape
    header = f"P5\n{nx} {ny}\n65535\n".encode("ascii")
    atomic_write_bytes(Path(path), header + scaled.tobytes())


def report_to_json(report: EvalReport, path: Path) -> None:
    import json

    atomic_write_text(Path(path), json.dumps(report.as_dict(), indent=2,
                                             sort_keys=True) + "\n")


def report_to_text(report: EvalReport, path: Path) -> None:
    atomic_write_text(Path(path), report.table())
