"""Shared builders for test scenes, random boxes, and the rule-based corpus."""

from __future__ import annotations

import numpy as np

from scenefit.geometry import (
    BoundingBox3,
    FurnitureGroup,
    GROUPS,
    Scene,
    SceneObject,
    bbox_xy_intersects,
    walls_from_loop,
)


def box(minv, maxv) -> BoundingBox3:
    return BoundingBox3(tuple(minv), tuple(maxv))


def box_at(cx, cy, length, width, height, bottom=0.0) -> BoundingBox3:
    return BoundingBox3.from_center(cx, cy, length, width, height, bottom)


def obj(oid, group, bbox) -> SceneObject:
    if isinstance(group, str):
        group = FurnitureGroup[group]
    return SceneObject(oid, group, bbox)


def rect_room(width_x=10.0, width_y=10.0, objects=(), scene_id="room",
              room_type="bedroom", origin=(0.0, 0.0)) -> Scene:
    ox, oy = origin
    loop = [
        (ox, oy),
        (ox + width_x, oy),
        (ox + width_x, oy + width_y),
        (ox, oy + width_y),
    ]
    return Scene(scene_id, room_type, walls_from_loop(loop), tuple(objects))


def random_box(rng, room_x=10.0, room_y=10.0, max_side=2.0, max_h=1.5) -> BoundingBox3:
    lx = rng.uniform(0.2, max_side)
    ly = rng.uniform(0.2, max_side)
    lz = rng.uniform(0.2, max_h)
    x0 = rng.uniform(0.0, room_x - lx)
    y0 = rng.uniform(0.0, room_y - ly)
    z0 = rng.uniform(0.0, 1.0) if rng.random() < 0.3 else 0.0
    return BoundingBox3((x0, y0, z0), (x0 + lx, y0 + ly, z0 + lz))


def random_scene(rng, n_objects=6, room_x=10.0, room_y=8.0, scene_id="rand") -> Scene:
    objects = []
    for i in range(n_objects):
        group = GROUPS[int(rng.integers(0, len(GROUPS)))]
        objects.append(SceneObject(f"o{i}", group, random_box(rng, room_x, room_y)))
    return rect_room(room_x, room_y, objects, scene_id=scene_id)


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------

def sample_box_surface(bbox: BoundingBox3, rng, n: int) -> np.ndarray:
    """Uniform-ish samples on the box surface (random face, uniform on it)."""
    lo = np.array(bbox.min)
    hi = np.array(bbox.max)
    pts = lo + rng.random((n, 3)) * (hi - lo)
    axes = rng.integers(0, 3, size=n)
    side = rng.integers(0, 2, size=n)
    for a in range(3):
        sel = axes == a
        pts[sel, a] = np.where(side[sel] == 1, hi[a], lo[a])
    return pts


def bbox_distance_oracle(a: BoundingBox3, b: BoundingBox3, rng, n=10_000) -> float:
    """Min pairwise distance between sampled surfaces; 0 when the boxes overlap."""
    from scipy.spatial import cKDTree

    if all(a.min[i] <= b.max[i] and b.min[i] <= a.max[i] for i in range(3)):
        return 0.0
    pa = sample_box_surface(a, rng, n)
    pb = sample_box_surface(b, rng, n)
    d, _ = cKDTree(pb).query(pa, k=1)
    return float(d.min())


def segment_rect_distance_oracle(p0, p1, rect, n=4000) -> float:
    """Dense sampling of the segment against the solid rectangle."""
    t = np.linspace(0.0, 1.0, n)
    xs = p0[0] + t * (p1[0] - p0[0])
    ys = p0[1] + t * (p1[1] - p0[1])
    gx = np.maximum(0.0, np.maximum(rect[0] - xs, xs - rect[2]))
    gy = np.maximum(0.0, np.maximum(rect[1] - ys, ys - rect[3]))
    return float(np.hypot(gx, gy).min())


# ---------------------------------------------------------------------------
# Rule-based synthetic corpus: beds live in corners next to a Storage
# nightstand; tables always have an adjacent chair.
# ---------------------------------------------------------------------------

BED_DIMS = (2.0, 1.6, 0.6)
NIGHTSTAND_DIMS = (0.5, 0.5, 0.6)
TABLE_DIMS = (1.4, 0.8, 0.75)
CHAIR_DIMS = (0.5, 0.5, 0.9)
DECOR_DIMS = (0.4, 0.4, 0.5)


def _collides(bbox, placed, margin=0.05) -> bool:
    grown = BoundingBox3(
        (bbox.min[0] - margin, bbox.min[1] - margin, bbox.min[2]),
        (bbox.max[0] + margin, bbox.max[1] + margin, bbox.max[2]),
    )
    return any(bbox_xy_intersects(grown, p.bbox) for p in placed)


def rule_based_room(rng, idx: int) -> Scene:
    """One synthetic bedroom following the placement rules."""
    rx = float(rng.uniform(4.5, 7.0))
    ry = float(rng.uniform(4.5, 7.0))
    objects: list[SceneObject] = []

    # Bed in a corner, nightstand (Storage) against its side.
    bl, bw, bh = BED_DIMS
    corner = int(rng.integers(0, 4))
    gap = float(rng.uniform(0.05, 0.20))
    if corner in (1, 3):
        bl, bw = bw, bl
    cx = gap + bl / 2 if corner in (0, 3) else rx - gap - bl / 2
    cy = gap + bw / 2 if corner in (0, 1) else ry - gap - bw / 2
    bed = SceneObject(f"bed_{idx}", FurnitureGroup.Bed, box_at(cx, cy, bl, bw, bh))
    objects.append(bed)

    nl, nw, nh = NIGHTSTAND_DIMS
    off = float(rng.uniform(0.05, 0.25))
    if corner in (0, 3):
        nx = cx + bl / 2 + off + nl / 2
    else:
        nx = cx - bl / 2 - off - nl / 2
    ny = min(max(cy, nw / 2 + 0.05), (ry if corner in (0, 1) else ry) - nw / 2 - 0.05)
    objects.append(SceneObject(f"stand_{idx}", FurnitureGroup.Storage,
                               box_at(nx, ny, nl, nw, nh)))

    # Table with an adjacent chair, both away from the walls.
    tl, tw, th = TABLE_DIMS
    for _ in range(200):
        tx = float(rng.uniform(1.2 + tl / 2, rx - 1.2 - tl / 2))
        ty = float(rng.uniform(1.2 + tw / 2, ry - 1.2 - tw / 2))
        tb = box_at(tx, ty, tl, tw, th)
        if not _collides(tb, objects, margin=0.3):
            break
    table = SceneObject(f"table_{idx}", FurnitureGroup.Table, tb)
    objects.append(table)

    cl, cw, ch = CHAIR_DIMS
    side = int(rng.integers(0, 4))
    cgap = float(rng.uniform(0.02, 0.15))
    ccx, ccy = tx, ty
    if side == 0:
        ccx = tx + tl / 2 + cgap + cl / 2
    elif side == 1:
        ccx = tx - tl / 2 - cgap - cl / 2
    elif side == 2:
        ccy = ty + tw / 2 + cgap + cw / 2
    else:
        ccy = ty - tw / 2 - cgap - cw / 2
    objects.append(SceneObject(f"chair_{idx}", FurnitureGroup.Chair,
                               box_at(ccx, ccy, cl, cw, ch)))

    # A free-floating decor item for clutter.
    dl, dw, dh = DECOR_DIMS
    for _ in range(200):
        dx = float(rng.uniform(0.5 + dl / 2, rx - 0.5 - dl / 2))
        dy = float(rng.uniform(0.5 + dw / 2, ry - 0.5 - dw / 2))
        db = box_at(dx, dy, dl, dw, dh)
        if not _collides(db, objects, margin=0.2):
            objects.append(SceneObject(f"decor_{idx}", FurnitureGroup.Decor, db))
            break

    return rect_room(rx, ry, objects, scene_id=f"synth_{idx:04d}")


def rule_based_corpus(n_rooms: int, seed: int = 7) -> list[Scene]:
    rng = np.random.default_rng(seed)
    return [rule_based_room(rng, i) for i in range(n_rooms)]
