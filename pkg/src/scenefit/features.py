"""Spatial-relationship features and the 48-D per-placement summary vector.

Every feature is computed for a query object against a scene; the query does
not have to be a member of the scene, which is what lets the same code score
hypothetical placements. When the query id matches a scene object, that object
is excluded from its own counts.

Summary vector layout (48 dims):

    [ 3C(3) | EB(1) | CB(1) | AD(8) | SB(8) | IX(9) | SBY(9) | STO(9) ]

AD and SB span the 8 furniture groups; IX, SBY, and STO additionally carry a
9th entry for walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .geometry import (
    GROUP_COUNT,
    FurnitureGroup,
    Scene,
    SceneObject,
    Wall,
    bbox_distance,
    bbox_wall_distance,
    bbox_xy_intersects,
)

# Block offsets within the summary vector.
OFF_3C = 0
OFF_EB = 3
OFF_CB = 4
OFF_AD = 5
OFF_SB = 13
OFF_IX = 21
OFF_SBY = 30
OFF_STO = 39
SUMMARY_DIM = 48

RHO_PER_WALL = "per_wall"
RHO_MIN_EXTENT = "min_extent"


@dataclass(frozen=True)
class FeatureParams:
    """Tunable thresholds for the spatial relationships.

    rho_fraction: fraction of the room extent that counts as "near a wall".
    support_tau:  max vertical gap (meters) between stacked boxes that still
                  counts as support.
    rho_mode:     "per_wall" scales rho by the room extent perpendicular to
                  each wall; "min_extent" uses one rho from the smaller extent.
    """

    rho_fraction: float = 0.20
    support_tau: float = 0.05
    rho_mode: str = RHO_PER_WALL

    def __post_init__(self) -> None:
        if not 0.0 < self.rho_fraction < 1.0:
            raise ValueError(f"rho_fraction must be in (0,1), got {self.rho_fraction}")
        if self.support_tau <= 0.0:
            raise ValueError(f"support_tau must be positive, got {self.support_tau}")
        if self.rho_mode not in (RHO_PER_WALL, RHO_MIN_EXTENT):
            raise ValueError(f"unknown rho_mode {self.rho_mode!r}")


def wall_rho(scene: Scene, wall: Wall, params: FeatureParams) -> float:
    """Near-wall threshold for one wall.

    In per-wall mode the threshold scales with the room extent perpendicular
    to the wall's dominant direction, so "near" adapts to elongated rooms.
    """
    ex, ey = scene.extent_x, scene.extent_y
    if params.rho_mode == RHO_MIN_EXTENT:
        return params.rho_fraction * min(ex, ey)
    dx, dy = wall.direction
    perpendicular = ey if abs(dx) >= abs(dy) else ex
    return params.rho_fraction * perpendicular


def near_wall(o: SceneObject, wall: Wall, scene: Scene, params: FeatureParams) -> bool:
    return bbox_wall_distance(o.bbox, wall) < wall_rho(scene, wall, params)


def room_position(o: SceneObject, scene: Scene, params: FeatureParams) -> int:
    """Number of walls the object is near: 0 = middle, 1 = edge, >= 2 = corner."""
    return sum(1 for w in scene.walls if near_wall(o, w, scene, params))


def position_label(count: int) -> str:
    if count >= 2:
        return "corner"
    return "edge" if count == 1 else "middle"


def _others(o: SceneObject, scene: Scene):
    return [x for x in scene.objects if x.id != o.id]


def avg_dist(o: SceneObject, group: FurnitureGroup, scene: Scene) -> float:
    """Mean box distance to the group's members; 0 when the group is empty.

    The zero sentinel keeps vectors finite; standardization downstream
    recenters it.
    """
    members = [x for x in _others(o, scene) if x.group is group]
    if not members:
        return 0.0
    return sum(bbox_distance(o.bbox, m.bbox) for m in members) / len(members)


def footprint_diagonal(o: SceneObject) -> float:
    """Proximity radius: length of the footprint diagonal."""
    return math.hypot(o.bbox.length, o.bbox.width)


def surrounded_by(o: SceneObject, group: FurnitureGroup, scene: Scene) -> int:
    eps = footprint_diagonal(o)
    return sum(
        1 for x in _others(o, scene)
        if x.group is group and bbox_distance(o.bbox, x.bbox) < eps
    )


def wall_intersects_footprint(o: SceneObject, wall: Wall) -> bool:
    return bbox_wall_distance(o.bbox, wall) == 0.0


def intersect_xy_counts(o: SceneObject, scene: Scene) -> np.ndarray:
    """Per-group footprint intersection counts plus a 9th entry for walls."""
    counts = np.zeros(GROUP_COUNT + 1)
    for x in _others(o, scene):
        if bbox_xy_intersects(o.bbox, x.bbox):
            counts[x.group.value] += 1
    counts[GROUP_COUNT] = sum(1 for w in scene.walls if wall_intersects_footprint(o, w))
    return counts


def support_sign(top_candidate: SceneObject, other: SceneObject,
                 params: FeatureParams) -> int:
    """+1 if top_candidate rests on other, -1 in the mirrored case, else 0.

    Resting means the vertical gap between the upper box's bottom plane and
    the lower box's top plane is in (0, tau) and the footprints overlap.
    """
    if not bbox_xy_intersects(top_candidate.bbox, other.bbox):
        return 0
    gap_up = top_candidate.bbox.min[2] - other.bbox.max[2]
    if 0.0 < gap_up < params.support_tau:
        return 1
    gap_down = other.bbox.min[2] - top_candidate.bbox.max[2]
    if 0.0 < gap_down < params.support_tau:
        return -1
    return 0


def supp_by_counts(o: SceneObject, scene: Scene, params: FeatureParams) -> np.ndarray:
    """How many objects of each group support o; the wall entry is always 0."""
    counts = np.zeros(GROUP_COUNT + 1)
    for x in _others(o, scene):
        if support_sign(o, x, params) == 1:
            counts[x.group.value] += 1
    return counts


def supp_to_counts(o: SceneObject, scene: Scene, params: FeatureParams) -> np.ndarray:
    """How many objects of each group o supports; the wall entry is always 0."""
    counts = np.zeros(GROUP_COUNT + 1)
    for x in _others(o, scene):
        if support_sign(o, x, params) == -1:
            counts[x.group.value] += 1
    return counts


def three_closest(o: SceneObject, scene: Scene) -> np.ndarray:
    """Group codes of the three nearest other objects, nearest first.

    Codes are group index + 1 so that 0 can pad rooms with fewer than three
    other objects. Ties break on object id for reproducibility.
    """
    ranked = sorted(_others(o, scene),
                    key=lambda x: (bbox_distance(o.bbox, x.bbox), x.id))
    codes = [float(x.group.value + 1) for x in ranked[:3]]
    return np.array(codes + [0.0] * (3 - len(codes)))


def summary_vector(o: SceneObject, scene: Scene, params: FeatureParams) -> np.ndarray:
    """The 48-D feature vector describing o's placement context in the scene."""
    v = np.zeros(SUMMARY_DIM)
    v[OFF_3C:OFF_3C + 3] = three_closest(o, scene)
    pos = room_position(o, scene, params)
    if pos == 1:
        v[OFF_EB] = 1.0
    elif pos >= 2:
        v[OFF_CB] = 1.0
    for g in FurnitureGroup:
        v[OFF_AD + g.value] = avg_dist(o, g, scene)
        v[OFF_SB + g.value] = surrounded_by(o, g, scene)
    v[OFF_IX:OFF_IX + 9] = intersect_xy_counts(o, scene)
    v[OFF_SBY:OFF_SBY + 9] = supp_by_counts(o, scene, params)
    v[OFF_STO:OFF_STO + 9] = supp_to_counts(o, scene, params)
    return v


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension affine transform fitted to a set of summary vectors."""

    mean: np.ndarray
    std: np.ndarray

    MIN_STD = 1e-8

    @classmethod
    def fit(cls, vectors: np.ndarray) -> "Standardizer":
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] < 2:
            raise GeometryError("standardizer needs at least 2 vectors")
        return cls(vectors.mean(axis=0), vectors.std(axis=0))

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Center every dimension; scale only those with non-degenerate spread."""
        scale = np.where(self.std < self.MIN_STD, 1.0, self.std)
        return (np.asarray(x, dtype=np.float64) - self.mean) / scale
