"""Parametric scene augmentation: wall-driven room deformation with
distance-decayed object translation, validity filters, and iterative
smallest-object removal.

Each wall translates rigidly along its outward normal by a random offset and
room corners are re-derived by intersecting the adjacent offset wall lines.
Objects follow the offset vector of their closest wall, scaled by
exp(-d / lambda) of their distance d to it, so furniture flush to a wall moves
with the wall while furniture in the middle of the room barely moves.

Rooms augment independently with a per-room random stream derived from the
global seed and the room id, so corpora are reproducible under any scheduling.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .geometry import (
    FurnitureGroup,
    Scene,
    SceneObject,
    Wall,
    bbox_wall_distance,
    box_intersection_volume,
    floor_raster,
    footprint_cell_masks,
    open_space_ratio,
    polygon_area,
    polygon_is_simple,
    polygon_signed_area,
)

STAGE_ORIGINAL = "original"
STAGE_PARAMETRIC = "parametric"
STAGE_FILTERED = "filtered"
STAGE_REMOVAL = "removal"
STAGES = (STAGE_ORIGINAL, STAGE_PARAMETRIC, STAGE_FILTERED, STAGE_REMOVAL)


@dataclass(frozen=True)
class AugmentParams:
    variants_per_room: int = 20
    wall_offset_max: float = 0.5
    falloff_lambda: float = 1.0
    open_space_max: float = 0.95
    overlap_max: float = 0.40
    removal_n: int = 4
    seed: int = 0
    max_retries: int = 100
    raster_resolution: int = 256

    def __post_init__(self) -> None:
        if self.variants_per_room < 0 or self.removal_n < 0:
            raise ValueError("counts must be nonnegative")
        if self.wall_offset_max <= 0 or self.falloff_lambda <= 0:
            raise ValueError("magnitudes must be positive")
        for frac in (self.open_space_max, self.overlap_max):
            if not 0.0 < frac <= 1.0:
                raise ValueError(f"fractions must be in (0,1], got {frac}")
        if self.raster_resolution < 16:
            raise ValueError("raster_resolution too small to be meaningful")


def wall_outward_normals(scene: Scene) -> np.ndarray:
    """Unit outward normal per wall, derived from the loop orientation."""
    ccw = polygon_signed_area(scene.floor_polygon) > 0
    normals = []
    for w in scene.walls:
        dx, dy = w.direction
        n = math.hypot(dx, dy)
        nx, ny = (dy / n, -dx / n) if ccw else (-dy / n, dx / n)
        normals.append((nx, ny))
    return np.array(normals)


def _line_intersection(p: np.ndarray, d: np.ndarray, q: np.ndarray, e: np.ndarray):
    denom = d[0] * e[1] - d[1] * e[0]
    if abs(denom) < 1e-12:
        return None
    t = ((q[0] - p[0]) * e[1] - (q[1] - p[1]) * e[0]) / denom
    return p + t * d


def deform_room(scene: Scene, offsets: np.ndarray) -> Scene:
    """Apply per-wall normal offsets and rebuild the room.

    Raises GeometryError when the offset wall lines produce a degenerate or
    self-intersecting polygon; callers retry with a fresh draw.
    """
    n = len(scene.walls)
    normals = wall_outward_normals(scene)
    shifts = offsets[:, None] * normals  # (n, 2)

    starts = np.array([w.start for w in scene.walls])
    dirs = np.array([w.direction for w in scene.walls])

    # Vertex i joins wall i-1 and wall i. Exact identity at zero offsets.
    new_verts = []
    for i in range(n):
        j = (i - 1) % n
        if offsets[i] == 0.0 and offsets[j] == 0.0:
            new_verts.append(starts[i].copy())
            continue
        v = _line_intersection(starts[j] + shifts[j], dirs[j],
                               starts[i] + shifts[i], dirs[i])
        if v is None:
            raise GeometryError("adjacent walls are parallel; offset has no corner")
        new_verts.append(v)
    verts = np.array(new_verts)
    if not polygon_is_simple(verts) or polygon_area(verts) <= 0.0:
        raise GeometryError("offset walls produce a degenerate polygon")

    walls = tuple(
        Wall(w.id, tuple(verts[i]), tuple(verts[(i + 1) % n]))
        for i, w in enumerate(scene.walls)
    )
    return Scene(scene.id, scene.room_type, walls, scene.objects)


def augment_room(scene: Scene, params: AugmentParams, rng: np.random.Generator,
                 new_id: str | None = None) -> Scene:
    """One deformed variant of the scene (walls offset, furniture following)."""
    n = len(scene.walls)
    offsets = rng.uniform(-params.wall_offset_max, params.wall_offset_max, size=n)
    deformed = deform_room(scene, offsets)

    normals = wall_outward_normals(scene)
    shifts = offsets[:, None] * normals

    moved = []
    for obj in scene.objects:
        dists = [bbox_wall_distance(obj.bbox, w) for w in scene.walls]
        closest = int(np.argmin(dists))
        factor = math.exp(-dists[closest] / params.falloff_lambda)
        dx, dy = shifts[closest] * factor
        moved.append(SceneObject(obj.id, obj.group, obj.bbox.translated(dx, dy)))

    return Scene(new_id or scene.id, scene.room_type, deformed.walls, tuple(moved))


def check_open_space(scene: Scene, params: AugmentParams) -> bool:
    """Filter (a): the room must not be mostly empty."""
    return open_space_ratio(scene, params.raster_resolution) <= params.open_space_max


def check_overlaps(scene: Scene, params: AugmentParams) -> bool:
    """Filter (b): no pair may overlap more than the allowed fraction of the
    smaller object's volume."""
    objs = scene.objects
    for i in range(len(objs)):
        for j in range(i + 1, len(objs)):
            inter = box_intersection_volume(objs[i].bbox, objs[j].bbox)
            if inter == 0.0:
                continue
            smaller = min(objs[i].bbox.volume, objs[j].bbox.volume)
            if smaller <= 0.0 or inter > params.overlap_max * smaller:
                return False
    return True


def delete_overlap_violators(scene: Scene, params: AugmentParams) -> Scene:
    """Drop items violating the overlap filter, worst pair first, smaller
    member removed, until the scene passes."""
    objs = list(scene.objects)
    while True:
        worst = None
        worst_frac = params.overlap_max
        for i in range(len(objs)):
            for j in range(i + 1, len(objs)):
                inter = box_intersection_volume(objs[i].bbox, objs[j].bbox)
                if inter == 0.0:
                    continue
                smaller = min(objs[i].bbox.volume, objs[j].bbox.volume)
                frac = inter / smaller if smaller > 0 else math.inf
                if frac > worst_frac:
                    worst_frac = frac
                    worst = (i, j)
        if worst is None:
            return scene.with_objects(objs)
        i, j = worst
        a, b = objs[i], objs[j]
        victim = i if (a.bbox.volume, a.id) <= (b.bbox.volume, b.id) else j
        del objs[victim]


def iterative_removal(scene: Scene, params: AugmentParams) -> list[Scene]:
    """Variant scenes with the 1..n smallest objects removed cumulatively.

    Stops early so every emitted room keeps at least one object.
    """
    by_volume = sorted(scene.objects, key=lambda o: (o.bbox.volume, o.id))
    out = []
    for i in range(1, params.removal_n + 1):
        if len(scene.objects) - i < 1:
            break
        removed_ids = {o.id for o in by_volume[:i]}
        kept = [o for o in scene.objects if o.id not in removed_ids]
        out.append(Scene(f"{scene.id}__rm{i}", scene.room_type, scene.walls, tuple(kept)))
    return out


def _room_rng(seed: int, room_id: str) -> np.random.Generator:
    digest = hashlib.sha256(room_id.encode("utf-8")).digest()
    return np.random.default_rng(np.random.SeedSequence(
        [seed, int.from_bytes(digest[:8], "big")]))


@dataclass
class StageCounts:
    rooms: int = 0
    objects_per_group: dict[str, int] = field(default_factory=dict)

    @classmethod
    def of(cls, scenes: list[Scene]) -> "StageCounts":
        counts = {g.label: 0 for g in FurnitureGroup}
        for s in scenes:
            for o in s.objects:
                counts[o.group.label] += 1
        return cls(rooms=len(scenes), objects_per_group=counts)


@dataclass
class AugmentedDataset:
    stages: dict[str, list[Scene]]
    counts: dict[str, StageCounts]

    @property
    def final_scenes(self) -> list[Scene]:
        return self.stages[STAGE_REMOVAL]

    def report_table(self) -> str:
        """Stage report: rooms and per-group object counts per pipeline stage."""
        headers = ["Object Type", *STAGES]
        rows = [[g.label] + [str(self.counts[st].objects_per_group[g.label])
                             for st in STAGES]
                for g in FurnitureGroup]
        rows.append(["Rooms"] + [str(self.counts[st].rooms) for st in STAGES])
        widths = [max(len(r[i]) for r in [headers, *rows]) for i in range(len(headers))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for r in rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
        return "\n".join(lines) + "\n"


def build_augmented_dataset(scenes: list[Scene], params: AugmentParams) -> AugmentedDataset:
    """Full pipeline: originals -> parametric variants -> filters -> removal."""
    parametric: list[Scene] = []
    for scene in scenes:
        rng = _room_rng(params.seed, scene.id)
        for k in range(params.variants_per_room):
            variant = None
            for _ in range(params.max_retries):
                try:
                    variant = augment_room(scene, params, rng,
                                           new_id=f"{scene.id}__aug{k:03d}")
                    break
                except GeometryError:
                    continue
            if variant is None:
                raise GeometryError(
                    f"scene {scene.id!r}: no valid deformation in "
                    f"{params.max_retries} draws")
            parametric.append(variant)

    # Filters, then removal variants. Both stages must emit only rooms that
    # pass the open-space check; removal children share their parent's raster
    # so subset checks stay cheap.
    filtered: list[Scene] = []
    removal: list[Scene] = []
    for scene in parametric:
        cleaned = delete_overlap_violators(scene, params)
        if not cleaned.objects:
            continue
        xs, ys, inside = floor_raster(cleaned, params.raster_resolution)
        n_floor = int(inside.sum())
        cell_masks = footprint_cell_masks(cleaned.objects, xs, ys)

        def space_ok(objs) -> bool:
            occupied = np.zeros_like(inside)
            for o in objs:
                ymask, xmask = cell_masks[o.id]
                occupied |= np.outer(ymask, xmask)
            ratio = 1.0 - int((occupied & inside).sum()) / n_floor
            return ratio <= params.open_space_max

        if not space_ok(cleaned.objects):
            continue
        filtered.append(cleaned)
        removal.append(cleaned)
        removal.extend(child for child in iterative_removal(cleaned, params)
                       if space_ok(child.objects))

    stages = {
        STAGE_ORIGINAL: list(scenes),
        STAGE_PARAMETRIC: parametric,
        STAGE_FILTERED: filtered,
        STAGE_REMOVAL: removal,
    }
    counts = {name: StageCounts.of(group) for name, group in stages.items()}
    return AugmentedDataset(stages=stages, counts=counts)
