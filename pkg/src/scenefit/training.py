"""Two-stage training for a furniture group's placement model.

Stage one trains the initialization + graph-attention + projection stack as a
Siamese network: both pair members pass through the same weights and the
max-margin contrastive loss pulls same-label projections together while
pushing mixed-label pairs beyond the margin. Stage two freezes that stack,
projects every plausible (label 1) placement, and trains the autoencoder to
reconstruct those projections, so implausible placements later surface as
reconstruction anomalies.

Ground-truth objects supply the positive placements; negatives are drawn
uniformly over the floor polygon, rejected while they fall within half an
object diagonal of any true placement of the same group.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, asdict

import numpy as np

from .encode import PlacementEncoding, encode_placement
from .errors import SaturatedRoomError, TrainingError
from .features import FeatureParams, Standardizer
from .geometry import FurnitureGroup, Scene, points_in_polygon
from .model import GroupModel, ModelDims
from .nn import Adam, autograd as ag, contrastive_loss_batch, mse

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_pairs: int = 100
    lr: float = 0.005
    l2_siamese: float = 1.0
    l2_ae: float = 0.0
    margin: float = 15.0
    negatives_per_positive: int = 1
    ae_epochs: int | None = None
    ae_batch: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_pairs < 1 or self.ae_batch < 1:
            raise ValueError("epochs and batch sizes must be positive")
        if self.lr <= 0 or self.margin <= 0:
            raise ValueError("lr and margin must be positive")
        if self.negatives_per_positive < 0:
            raise ValueError("negatives_per_positive must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LabeledPlacement:
    """A candidate placement with its plausibility label.

    The scene is the placement's context and must not contain the object
    being placed; dims are the object's (length, width, height).
    """

    scene: Scene
    group: FurnitureGroup
    dims: tuple[float, float, float]
    center: tuple[float, float]
    label: int
    source_id: str = ""

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise TrainingError(f"label must be 0 or 1, got {self.label}")
        if not self.scene.contains_point(*self.center):
            raise TrainingError(
                f"placement center {self.center} outside floor of {self.scene.id!r}")


def positives_for_group(scenes: list[Scene], group: FurnitureGroup) -> list[LabeledPlacement]:
    """Every real placement of the group, each with its object removed from
    its own context scene."""
    out = []
    for scene in scenes:
        for o in scene.objects_of(group):
            out.append(LabeledPlacement(
                scene=scene.without(o.id),
                group=group,
                dims=(o.bbox.length, o.bbox.width, o.bbox.height),
                center=o.bbox.centroid_xy,
                label=1,
                source_id=f"{scene.id}/{o.id}",
            ))
    return out


def sample_negative(scene: Scene, group: FurnitureGroup,
                    dims: tuple[float, float, float], rng: np.random.Generator,
                    avoid_centers: list[tuple[float, float]] | None = None,
                    max_draws: int = 1000) -> LabeledPlacement:
    """Uniform draw over the floor polygon, redrawn while the point sits within
    half a footprint diagonal of any ground-truth placement of the group."""
    minx, miny, maxx, maxy = scene.bounds
    radius = float(np.hypot(dims[0], dims[1])) / 2.0
    avoid = np.array(avoid_centers or [], dtype=np.float64).reshape(-1, 2)
    verts = scene.floor_polygon
    for _ in range(max_draws):
        x = rng.uniform(minx, maxx)
        y = rng.uniform(miny, maxy)
        if not points_in_polygon(np.array([[x, y]]), verts)[0]:
            continue
        if len(avoid) and (np.hypot(avoid[:, 0] - x, avoid[:, 1] - y) < radius).any():
            continue
        return LabeledPlacement(scene=scene, group=group, dims=dims,
                                center=(x, y), label=0,
                                source_id=f"{scene.id}/negative")
    raise SaturatedRoomError(
        f"no admissible negative in {scene.id!r} after {max_draws} draws")


def build_training_set(scenes: list[Scene], group: FurnitureGroup,
                       cfg: TrainConfig, rng: np.random.Generator) -> list[LabeledPlacement]:
    """Positives from ground truth plus sampled negatives sharing each
    positive's context and dimensions."""
    placements = []
    for scene in scenes:
        truth_centers = [o.bbox.centroid_xy for o in scene.objects_of(group)]
        for o in scene.objects_of(group):
            context = scene.without(o.id)
            dims = (o.bbox.length, o.bbox.width, o.bbox.height)
            placements.append(LabeledPlacement(
                scene=context, group=group, dims=dims,
                center=o.bbox.centroid_xy, label=1,
                source_id=f"{scene.id}/{o.id}"))
            for _ in range(cfg.negatives_per_positive):
                placements.append(sample_negative(context, group, dims, rng,
                                                  avoid_centers=truth_centers))
    return placements


def encode_placements(model: GroupModel,
                      placements: list[LabeledPlacement]) -> list[PlacementEncoding]:
    return [
        encode_placement(p.scene, p.group, p.dims, p.center, model.feature_params,
                         model.max_support_height)
        for p in placements
    ]


def sample_pair_indices(labels: np.ndarray, n_pairs: int,
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half same-label pairs (label chosen uniformly), half mixed pairs."""
    pos = np.nonzero(labels == 1)[0]
    neg = np.nonzero(labels == 0)[0]
    if len(pos) == 0 or len(neg) == 0:
        raise TrainingError("pair sampling needs both labels present")
    left = np.empty(n_pairs, dtype=np.int64)
    right = np.empty(n_pairs, dtype=np.int64)
    same = np.zeros(n_pairs, dtype=np.float64)
    n_same = n_pairs // 2
    for i in range(n_same):
        pool = pos if rng.random() < 0.5 else neg
        left[i], right[i] = rng.choice(pool, size=2, replace=True)
        same[i] = 1.0
    for i in range(n_same, n_pairs):
        left[i] = rng.choice(pos)
        right[i] = rng.choice(neg)
    return left, right, same


def fit_standardizer(model: GroupModel, placements: list[LabeledPlacement],
                     encodings: list[PlacementEncoding]) -> None:
    if len(encodings) < 2:
        raise TrainingError("need at least 2 placements to fit the standardizer")
    model.standardizer = Standardizer.fit(np.stack([e.summary for e in encodings]))


def train_siamese(model: GroupModel, placements: list[LabeledPlacement],
                  cfg: TrainConfig) -> list[float]:
    """Stage one. Returns the mean contrastive loss per epoch."""
    labels = np.array([p.label for p in placements])
    if not ((labels == 0).any() and (labels == 1).any()):
        raise TrainingError("siamese training needs both labels in the dataset")
    encodings = encode_placements(model, placements)
    if model.standardizer is None:
        fit_standardizer(model, placements, encodings)

    seeds = np.random.SeedSequence([cfg.seed, model.group.value, 1]).spawn(2)
    rng_pairs = np.random.default_rng(seeds[0])
    rng_drop = np.random.default_rng(seeds[1])

    params = [t for _, t in model.igatp_parameters()]
    opt = Adam(params, lr=cfg.lr, l2_weight=cfg.l2_siamese)
    batches = max(1, len(placements) // cfg.batch_pairs)

    epoch_losses = []
    for _ in range(cfg.epochs):
        total = 0.0
        for _ in range(batches):
            left, right, same = sample_pair_indices(labels, cfg.batch_pairs, rng_pairs)
            y1 = model.project_batch([encodings[i] for i in left],
                                     training=True, rng=rng_drop)
            y2 = model.project_batch([encodings[i] for i in right],
                                     training=True, rng=rng_drop)
            loss = contrastive_loss_batch(y1, y2, same.reshape(-1, 1), cfg.margin)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item()
        epoch_losses.append(total / batches)
    return epoch_losses


def train_autoencoder(model: GroupModel, positives: list[LabeledPlacement],
                      cfg: TrainConfig) -> list[float]:
    """Stage two: reconstruct frozen projections of plausible placements.

    The IGATP stack is never touched; only encoder/decoder parameters move.
    """
    positives = [p for p in positives if p.label == 1]
    if not positives:
        raise TrainingError("autoencoder training needs at least one positive")
    encodings = encode_placements(model, positives)
    targets = model.project_batch(encodings).data  # frozen IGATP, eval mode

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, model.group.value, 2]))
    params = [t for _, t in model.ae_parameters()]
    opt = Adam(params, lr=cfg.lr, l2_weight=cfg.l2_ae)

    n = len(targets)
    epochs = cfg.ae_epochs if cfg.ae_epochs is not None else cfg.epochs
    epoch_losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        count = 0
        for start in range(0, n, cfg.ae_batch):
            batch = ag.const(targets[order[start:start + cfg.ae_batch]])
            loss = mse(model.reconstruct(batch), batch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item()
            count += 1
        epoch_losses.append(total / count)
    return epoch_losses


@dataclass
class TrainLog:
    siamese_losses: list[float]
    autoencoder_losses: list[float]
    n_positives: int
    n_negatives: int


def train_group_model(scenes: list[Scene], group: FurnitureGroup,
                      cfg: TrainConfig | None = None,
                      dims: ModelDims | None = None,
                      feature_params: FeatureParams | None = None,
                      max_support_height: float | None = None) -> tuple[GroupModel, TrainLog]:
    """Full two-stage pipeline for one group over a scene corpus."""
    cfg = cfg or TrainConfig()
    if not scenes:
        raise TrainingError("empty corpus")
    kwargs = {}
    if max_support_height is not None:
        kwargs["max_support_height"] = max_support_height
    model = GroupModel.create(group, seed=cfg.seed, dims=dims,
                              feature_params=feature_params, **kwargs)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, group.value, 0]))
    placements = build_training_set(scenes, group, cfg, rng)
    if not placements:
        raise TrainingError(f"corpus contains no {group.label} objects")
    siamese_losses = train_siamese(model, placements, cfg)
    positives = [p for p in placements if p.label == 1]
    ae_losses = train_autoencoder(model, positives, cfg)
    log.info("trained %s: %d positives, %d negatives", group.label,
             len(positives), len(placements) - len(positives))
    return model, TrainLog(siamese_losses, ae_losses, len(positives),
                           len(placements) - len(positives))
