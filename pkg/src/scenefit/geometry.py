"""Core scene geometry: furniture groups, boxes, walls, rooms, and the shared
shortest-distance function used by every spatial feature.

All types are immutable value objects; all operations are pure functions, so
everything here is safe to use from concurrent workers.

Coordinates are meters. The floor lies in the (x, y) plane, z points up, and
rooms are 2.5-D: walls are vertical 1-D segments in plan view, objects are
axis-aligned 3-D boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import GeometryError


class FurnitureGroup(Enum):
    """The eight coarse furniture categories; the enum value is the feature index."""

    Bed = 0
    Chair = 1
    Decor = 2
    Picture = 3
    Sofa = 4
    Storage = 5
    Table = 6
    TV = 7

    @property
    def label(self) -> str:
        return self.name

    @classmethod
    def from_label(cls, label: str) -> "FurnitureGroup":
        try:
            return cls[label]
        except KeyError:
            raise GeometryError(f"unknown furniture group label: {label!r}") from None


GROUP_COUNT = len(FurnitureGroup)
GROUPS: tuple[FurnitureGroup, ...] = tuple(FurnitureGroup)


def _vec3(v: Sequence[float]) -> tuple[float, float, float]:
    if len(v) != 3:
        raise GeometryError(f"expected a 3-vector, got {v!r}")
    return (float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class BoundingBox3:
    """Axis-aligned 3-D box given by its min and max corners."""

    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "min", _vec3(self.min))
        object.__setattr__(self, "max", _vec3(self.max))
        for lo, hi, axis in zip(self.min, self.max, "xyz"):
            if lo > hi:
                raise GeometryError(f"inverted box on axis {axis}: min {lo} > max {hi}")

    @property
    def length(self) -> float:
        """Extent along x."""
        return self.max[0] - self.min[0]

    @property
    def width(self) -> float:
        """Extent along y."""
        return self.max[1] - self.min[1]

    @property
    def height(self) -> float:
        return self.max[2] - self.min[2]

    @property
    def volume(self) -> float:
        return self.length * self.width * self.height

    @property
    def centroid(self) -> tuple[float, float, float]:
        return tuple((lo + hi) / 2.0 for lo, hi in zip(self.min, self.max))

    @property
    def centroid_xy(self) -> tuple[float, float]:
        return self.centroid[:2]

    @property
    def footprint(self) -> tuple[float, float, float, float]:
        """Ground-projected rectangle as (min_x, min_y, max_x, max_y)."""
        return (self.min[0], self.min[1], self.max[0], self.max[1])

    def translated(self, dx: float, dy: float, dz: float = 0.0) -> "BoundingBox3":
        d = (dx, dy, dz)
        return BoundingBox3(
            tuple(c + o for c, o in zip(self.min, d)),
            tuple(c + o for c, o in zip(self.max, d)),
        )

    @classmethod
    def from_center(
        cls, cx: float, cy: float, length: float, width: float, height: float,
        bottom_z: float = 0.0,
    ) -> "BoundingBox3":
        """Box of the given dimensions centered at (cx, cy) in plan, resting at bottom_z."""
        return cls(
            (cx - length / 2.0, cy - width / 2.0, bottom_z),
            (cx + length / 2.0, cy + width / 2.0, bottom_z + height),
        )


@dataclass(frozen=True)
class SceneObject:
    """A piece of furniture: semantic group plus a positioned bounding box."""

    id: str
    group: FurnitureGroup
    bbox: BoundingBox3

    def moved_to(self, cx: float, cy: float) -> "SceneObject":
        """Same object with its footprint re-centered at (cx, cy); z untouched."""
        ox, oy = self.bbox.centroid_xy
        return SceneObject(self.id, self.group, self.bbox.translated(cx - ox, cy - oy))


@dataclass(frozen=True)
class Wall:
    """One wall of the room, a 1-D line segment in plan view."""

    id: str
    start: tuple[float, float]
    end: tuple[float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", (float(self.start[0]), float(self.start[1])))
        object.__setattr__(self, "end", (float(self.end[0]), float(self.end[1])))
        if self.start == self.end:
            raise GeometryError(f"wall {self.id!r} has coincident endpoints {self.start}")

    @property
    def direction(self) -> tuple[float, float]:
        return (self.end[0] - self.start[0], self.end[1] - self.start[1])


def walls_from_loop(points: Sequence[Sequence[float]], prefix: str = "wall") -> tuple[Wall, ...]:
    """Build the ordered wall list from a closed vertex loop (last vertex joins the first)."""
    pts = [(float(p[0]), float(p[1])) for p in points]
    if len(pts) < 3:
        raise GeometryError(f"a room needs at least 3 wall vertices, got {len(pts)}")
    return tuple(
        Wall(f"{prefix}_{i}", pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))
    )


@dataclass(frozen=True)
class Scene:
    """A room: typed walls forming a closed simple polygon plus its furniture."""

    id: str
    room_type: str
    walls: tuple[Wall, ...]
    objects: tuple[SceneObject, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "walls", tuple(self.walls))
        object.__setattr__(self, "objects", tuple(self.objects))
        if len(self.walls) < 3:
            raise GeometryError(f"scene {self.id!r}: needs >= 3 walls, got {len(self.walls)}")
        for a, b in zip(self.walls, self.walls[1:] + self.walls[:1]):
            if a.end != b.start:
                raise GeometryError(
                    f"scene {self.id!r}: wall loop is open between {a.id!r} and {b.id!r}"
                )
        verts = self.floor_polygon
        if not polygon_is_simple(verts):
            raise GeometryError(f"scene {self.id!r}: wall polygon is self-intersecting")
        if polygon_area(verts) <= 0.0:
            raise GeometryError(f"scene {self.id!r}: wall polygon has zero area")
        minx, miny, maxx, maxy = self.bounds
        if maxx - minx <= 0.0 or maxy - miny <= 0.0:
            raise GeometryError(f"scene {self.id!r}: degenerate bounding rectangle")
        seen: set[str] = set()
        for obj in self.objects:
            if obj.id in seen:
                raise GeometryError(f"scene {self.id!r}: duplicate object id {obj.id!r}")
            seen.add(obj.id)

    @cached_property
    def floor_polygon(self) -> np.ndarray:
        """Polygon vertices (n, 2), one per wall start point, in loop order."""
        return np.array([w.start for w in self.walls], dtype=np.float64)

    @cached_property
    def bounds(self) -> tuple[float, float, float, float]:
        """Bounding rectangle of the wall polygon: (min_x, min_y, max_x, max_y)."""
        v = self.floor_polygon
        return (float(v[:, 0].min()), float(v[:, 1].min()),
                float(v[:, 0].max()), float(v[:, 1].max()))

    @property
    def extent_x(self) -> float:
        b = self.bounds
        return b[2] - b[0]

    @property
    def extent_y(self) -> float:
        b = self.bounds
        return b[3] - b[1]

    @cached_property
    def center(self) -> tuple[float, float]:
        """Area centroid of the wall polygon."""
        cx, cy = polygon_centroid(self.floor_polygon)
        return (float(cx), float(cy))

    def objects_of(self, group: FurnitureGroup) -> tuple[SceneObject, ...]:
        return tuple(o for o in self.objects if o.group is group)

    def without(self, object_id: str) -> "Scene":
        """Copy of the scene minus one object."""
        kept = tuple(o for o in self.objects if o.id != object_id)
        if len(kept) == len(self.objects):
            raise GeometryError(f"scene {self.id!r}: no object with id {object_id!r}")
        return Scene(self.id, self.room_type, self.walls, kept)

    def with_objects(self, objects: Iterable[SceneObject]) -> "Scene":
        return Scene(self.id, self.room_type, self.walls, tuple(objects))

    def contains_point(self, x: float, y: float) -> bool:
        return bool(points_in_polygon(np.array([[x, y]]), self.floor_polygon)[0])


# ---------------------------------------------------------------------------
# Polygon primitives
# ---------------------------------------------------------------------------

def polygon_signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_area(verts: np.ndarray) -> float:
    return abs(polygon_signed_area(verts))


def polygon_centroid(verts: np.ndarray) -> tuple[float, float]:
    """Area centroid; falls back to the vertex mean for near-zero areas."""
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * float(np.sum(cross))
    if abs(a) < 1e-12:
        return (float(x.mean()), float(y.mean()))
    cx = float(np.sum((x + xn) * cross)) / (6.0 * a)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * a)
    return (cx, cy)


def _orient(p: tuple[float, float], q: tuple[float, float], r: tuple[float, float]) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p: tuple[float, float], q: tuple[float, float], r: tuple[float, float]) -> bool:
    """Whether r lies on segment pq, assuming p, q, r collinear."""
    return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))


def segments_intersect(p0, p1, q0, q1) -> bool:
    """Whether two closed segments share at least one point (touching counts)."""
    d1 = _orient(q0, q1, p0)
    d2 = _orient(q0, q1, p1)
    d3 = _orient(p0, p1, q0)
    d4 = _orient(p0, p1, q1)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0
            and (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0):
        return True
    if d1 == 0 and _on_segment(q0, q1, p0):
        return True
    if d2 == 0 and _on_segment(q0, q1, p1):
        return True
    if d3 == 0 and _on_segment(p0, p1, q0):
        return True
    if d4 == 0 and _on_segment(p0, p1, q1):
        return True
    return False


def polygon_is_simple(verts: np.ndarray) -> bool:
    """True for a non-self-intersecting loop with no degenerate edges.

    Adjacent edges may only share their common vertex; non-adjacent edges may
    not touch at all.
    """
    n = len(verts)
    if n < 3:
        return False
    pts = [tuple(map(float, v)) for v in verts]
    edges = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for a, b in edges:
        if a == b:
            return False
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            (p0, p1), (q0, q1) = edges[i], edges[j]
            if adjacent:
                # The shared vertex is fine; a collinear fold-back is not.
                shared = p1 if j == i + 1 else p0
                other_p = p0 if shared == p1 else p1
                other_q = q1 if shared == q0 else q0
                if _orient(shared, other_p, other_q) == 0:
                    dot = ((other_p[0] - shared[0]) * (other_q[0] - shared[0])
                           + (other_p[1] - shared[1]) * (other_q[1] - shared[1]))
                    if dot > 0:
                        return False
            elif segments_intersect(p0, p1, q0, q1):
                return False
    return True


def point_in_polygon(x: float, y: float, verts: np.ndarray) -> bool:
    return bool(points_in_polygon(np.array([[x, y]], dtype=np.float64), verts)[0])


def points_in_polygon(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Vectorized even-odd (ray casting) test. points: (n, 2) -> (n,) bool."""
    px = points[:, 0][:, None]
    py = points[:, 1][:, None]
    x0 = verts[:, 0][None, :]
    y0 = verts[:, 1][None, :]
    x1 = np.roll(verts[:, 0], -1)[None, :]
    y1 = np.roll(verts[:, 1], -1)[None, :]
    crosses = ((y0 <= py) & (y1 > py)) | ((y1 <= py) & (y0 > py))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (py - y0) / (y1 - y0)
        xint = x0 + t * (x1 - x0)
    hits = crosses & (px < xint)
    return (hits.sum(axis=1) % 2).astype(bool)


# ---------------------------------------------------------------------------
# Shortest-distance function and intersection predicates
# ---------------------------------------------------------------------------

def bbox_distance(a: BoundingBox3, b: BoundingBox3) -> float:
    """Shortest Euclidean distance between two closed boxes; 0 when they intersect."""
    d = 0.0
    for lo_a, hi_a, lo_b, hi_b in zip(a.min, a.max, b.min, b.max):
        gap = max(0.0, lo_a - hi_b, lo_b - hi_a)
        d += gap * gap
    return math.sqrt(d)


def point_bbox_distance(point: Sequence[float], box: BoundingBox3) -> float:
    """Distance from a 3-D point to a closed box; 0 inside."""
    d = 0.0
    for p, lo, hi in zip(point, box.min, box.max):
        gap = max(0.0, lo - p, p - hi)
        d += gap * gap
    return math.sqrt(d)


def point_rect_distance(x: float, y: float, rect: Sequence[float]) -> float:
    gx = max(0.0, rect[0] - x, x - rect[2])
    gy = max(0.0, rect[1] - y, y - rect[3])
    return math.hypot(gx, gy)


def point_segment_distance(x: float, y: float, p0, p1) -> float:
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0.0:
        return math.hypot(x - p0[0], y - p0[1])
    t = ((x - p0[0]) * dx + (y - p0[1]) * dy) / seg_len2
    t = min(1.0, max(0.0, t))
    return math.hypot(x - (p0[0] + t * dx), y - (p0[1] + t * dy))


def _segment_crosses_rect(p0, p1, rect: Sequence[float]) -> bool:
    """Whether the segment shares any point with the closed rectangle."""
    minx, miny, maxx, maxy = rect
    for x, y in (p0, p1):
        if minx <= x <= maxx and miny <= y <= maxy:
            return True
    corners = ((minx, miny), (maxx, miny), (maxx, maxy), (minx, maxy))
    for i in range(4):
        if segments_intersect(p0, p1, corners[i], corners[(i + 1) % 4]):
            return True
    return False


def segment_rect_distance(p0, p1, rect: Sequence[float]) -> float:
    """Shortest distance between a 2-D segment and a closed axis-aligned rectangle.

    Both sets are convex, so outside of intersection the minimum is attained at
    a rectangle corner against the segment or a segment endpoint against the
    rectangle.
    """
    if _segment_crosses_rect(p0, p1, rect):
        return 0.0
    minx, miny, maxx, maxy = rect
    d = min(
        point_segment_distance(minx, miny, p0, p1),
        point_segment_distance(maxx, miny, p0, p1),
        point_segment_distance(maxx, maxy, p0, p1),
        point_segment_distance(minx, maxy, p0, p1),
        point_rect_distance(p0[0], p0[1], rect),
        point_rect_distance(p1[0], p1[1], rect),
    )
    return d


def bbox_wall_distance(box: BoundingBox3, wall: Wall) -> float:
    """Shortest distance between a box's ground footprint and a wall segment."""
    return segment_rect_distance(wall.start, wall.end, box.footprint)


def rects_overlap(a: Sequence[float], b: Sequence[float]) -> bool:
    """Closed-rectangle overlap in the plane; touching edges count."""
    return (a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3])


def bbox_xy_intersects(a: BoundingBox3, b: BoundingBox3) -> bool:
    """Whether the ground-projected rectangles overlap or touch (z is ignored)."""
    return rects_overlap(a.footprint, b.footprint)


def box_intersection_volume(a: BoundingBox3, b: BoundingBox3) -> float:
    v = 1.0
    for lo_a, hi_a, lo_b, hi_b in zip(a.min, a.max, b.min, b.max):
        overlap = min(hi_a, hi_b) - max(lo_a, lo_b)
        if overlap <= 0.0:
            return 0.0
        v *= overlap
    return v


# ---------------------------------------------------------------------------
# Vectorized kernels (hot paths: grid scoring, augmentation filters)
# ---------------------------------------------------------------------------

def aabb_distances(mins: np.ndarray, maxs: np.ndarray,
                   other_min: np.ndarray, other_max: np.ndarray) -> np.ndarray:
    """Distances from each box in (mins, maxs) [n, 3] to one box (3,)/(3,)."""
    gap = np.maximum(0.0, np.maximum(mins - other_max[None, :], other_min[None, :] - maxs))
    return np.sqrt((gap * gap).sum(axis=1))


def segment_rect_distances(p0, p1, rects: np.ndarray) -> np.ndarray:
    """segment_rect_distance of one segment against many rects (n, 4) -> (n,)."""
    n = len(rects)
    minx, miny, maxx, maxy = rects[:, 0], rects[:, 1], rects[:, 2], rects[:, 3]
    p0 = (float(p0[0]), float(p0[1]))
    p1 = (float(p1[0]), float(p1[1]))

    corners = np.stack([
        np.stack([minx, miny], axis=1),
        np.stack([maxx, miny], axis=1),
        np.stack([maxx, maxy], axis=1),
        np.stack([minx, maxy], axis=1),
    ])  # (4, n, 2)

    # Vertex terms: rect corners vs segment, segment endpoints vs rect.
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    seg_len2 = dx * dx + dy * dy
    cx, cy = corners[..., 0], corners[..., 1]
    if seg_len2 == 0.0:
        corner_d = np.hypot(cx - p0[0], cy - p0[1])
    else:
        t = ((cx - p0[0]) * dx + (cy - p0[1]) * dy) / seg_len2
        t = np.clip(t, 0.0, 1.0)
        corner_d = np.hypot(cx - (p0[0] + t * dx), cy - (p0[1] + t * dy))
    corner_d = corner_d.min(axis=0)

    end_d = np.full(n, np.inf)
    for (ex, ey) in (p0, p1):
        gx = np.maximum(0.0, np.maximum(minx - ex, ex - maxx))
        gy = np.maximum(0.0, np.maximum(miny - ey, ey - maxy))
        end_d = np.minimum(end_d, np.hypot(gx, gy))

    dist = np.minimum(corner_d, end_d)

    # Zero out rects the segment passes through: endpoint inside, or a proper
    # crossing of a rect edge (touching cases already yield 0 via vertex terms).
    inside = np.zeros(n, dtype=bool)
    for (ex, ey) in (p0, p1):
        inside |= (minx <= ex) & (ex <= maxx) & (miny <= ey) & (ey <= maxy)
    crossing = np.zeros(n, dtype=bool)
    for i in range(4):
        q0, q1 = corners[i], corners[(i + 1) % 4]  # (n, 2)
        d1 = _cross_many(q0, q1, p0)
        d2 = _cross_many(q0, q1, p1)
        d3 = _cross_point(p0, p1, q0)
        d4 = _cross_point(p0, p1, q1)
        proper = (((d1 > 0) != (d2 > 0)) & (d1 != 0) & (d2 != 0)
                  & ((d3 > 0) != (d4 > 0)) & (d3 != 0) & (d4 != 0))
        crossing |= proper
    dist[inside | crossing] = 0.0
    return dist


def _cross_many(q0: np.ndarray, q1: np.ndarray, p) -> np.ndarray:
    return ((q1[:, 0] - q0[:, 0]) * (p[1] - q0[:, 1])
            - (q1[:, 1] - q0[:, 1]) * (p[0] - q0[:, 0]))


def _cross_point(p0, p1, r: np.ndarray) -> np.ndarray:
    return ((p1[0] - p0[0]) * (r[:, 1] - p0[1])
            - (p1[1] - p0[1]) * (r[:, 0] - p0[0]))


# ---------------------------------------------------------------------------
# Open-space measurement
# ---------------------------------------------------------------------------

def grid_mask_in_polygon(xs: np.ndarray, ys: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Inside-polygon mask (len(ys), len(xs)) for a rectilinear grid of points.

    Scanline parity, fully broadcast over rows x columns x edges; agrees with
    points_in_polygon on every cell. Rooms have few walls, so the (ny, nx, m)
    intermediate stays small.
    """
    x0, y0 = verts[:, 0], verts[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    y = ys[:, None]
    crossing = ((y0 <= y) & (y1 > y)) | ((y1 <= y) & (y0 > y))  # (ny, m)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (y - y0) / (y1 - y0)
        xint = x0 + t * (x1 - x0)
    xint = np.where(crossing, xint, -np.inf)  # non-crossing edges never count
    hits = xs[None, :, None] < xint[:, None, :]  # (ny, nx, m)
    return np.logical_xor.reduce(hits, axis=2)


def floor_raster(scene: Scene, resolution: int = 512) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Raster grid over the room's bounding rectangle: cell-center coordinate
    vectors xs, ys plus the inside-floor mask."""
    verts = scene.floor_polygon
    if polygon_area(verts) <= 0.0:
        raise GeometryError(f"scene {scene.id!r}: floor polygon has no area")
    minx, miny, maxx, maxy = scene.bounds
    xs = minx + (np.arange(resolution) + 0.5) * (maxx - minx) / resolution
    ys = miny + (np.arange(resolution) + 0.5) * (maxy - miny) / resolution
    inside = grid_mask_in_polygon(xs, ys, verts)
    if not inside.any():
        raise GeometryError(f"scene {scene.id!r}: no raster cell lies inside the floor")
    return xs, ys, inside


def footprint_cell_masks(objects: Sequence[SceneObject], xs: np.ndarray,
                         ys: np.ndarray) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-object (ymask, xmask) factor masks; an object's occupancy raster is
    their outer product."""
    masks = {}
    for obj in objects:
        fx0, fy0, fx1, fy1 = obj.bbox.footprint
        masks[obj.id] = ((ys >= fy0) & (ys <= fy1), (xs >= fx0) & (xs <= fx1))
    return masks


def open_space_ratio(scene: Scene, resolution: int = 512) -> float:
    """Unoccupied fraction of the floor polygon.

    The union of object footprints is measured on a resolution x resolution
    raster over the room's bounding rectangle (exact polygon clipping is not
    worth the geometry burden here).
    """
    xs, ys, inside = floor_raster(scene, resolution)
    n_floor = int(inside.sum())
    occupied = np.zeros_like(inside)
    for ymask, xmask in footprint_cell_masks(scene.objects, xs, ys).values():
        occupied |= np.outer(ymask, xmask)
    n_occupied = int((occupied & inside).sum())
    return 1.0 - n_occupied / n_floor
