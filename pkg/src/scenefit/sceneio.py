"""Scene file schema (versioned JSON) and readers/writers.

A scene document looks like:

    {
      "schema_version": 1,
      "id": "bedroom_01",
      "room_type": "bedroom",
      "walls": [[0,0], [5,0], [5,4], [0,4], [0,0]],
      "objects": [
        {"id": "bed0", "group": "Bed",
         "bbox": {"min": [0.1, 0.1, 0.0], "max": [2.1, 1.7, 0.6]}}
      ]
    }

walls is an ordered 2-D point loop that must be explicitly closed (last point
repeats the first); consecutive points form the walls. Unknown keys, unknown
group labels, open loops, and inverted boxes are schema errors with the
offending field named.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import GeometryError, SchemaError
from .geometry import BoundingBox3, FurnitureGroup, Scene, SceneObject, walls_from_loop
from .nn.serialize import atomic_write_text

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "id", "room_type", "walls", "objects"}
_OBJ_KEYS = {"id", "group", "bbox"}
_BBOX_KEYS = {"min", "max"}


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def _check_point(p, where: str, dim: int) -> list[float]:
    _require(isinstance(p, (list, tuple)) and len(p) == dim,
             f"{where}: expected a {dim}-element number list")
    out = []
    for i, v in enumerate(p):
        _require(isinstance(v, (int, float)) and not isinstance(v, bool),
                 f"{where}[{i}]: expected a number")
        out.append(float(v))
    return out


def scene_from_doc(doc: dict) -> Scene:
    """Validate a parsed scene document and build the Scene."""
    _require(isinstance(doc, dict), "scene document must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    _require(not unknown, f"unknown keys: {sorted(unknown)}")
    for key in _TOP_KEYS:
        _require(key in doc, f"missing key: {key}")
    _require(doc["schema_version"] == SCHEMA_VERSION,
             f"schema_version: expected {SCHEMA_VERSION}, got {doc['schema_version']}")
    _require(isinstance(doc["id"], str) and doc["id"], "id: expected a nonempty string")
    _require(isinstance(doc["room_type"], str), "room_type: expected a string")
    scene_id = doc["id"]

    walls = doc["walls"]
    _require(isinstance(walls, list), f"scene {scene_id}: walls must be a list")
    _require(len(walls) >= 4, f"scene {scene_id}: walls need >= 4 points "
             "(3 corners plus the closing point)")
    pts = [_check_point(p, f"walls[{i}]", 2) for i, p in enumerate(walls)]
    _require(pts[0] == pts[-1],
             f"scene {scene_id}: open wall loop (last point must repeat the first)")
    loop = pts[:-1]

    objects = []
    _require(isinstance(doc["objects"], list), f"scene {scene_id}: objects must be a list")
    for i, entry in enumerate(doc["objects"]):
        where = f"objects[{i}]"
        _require(isinstance(entry, dict), f"{where}: expected an object")
        unknown = set(entry) - _OBJ_KEYS
        _require(not unknown, f"{where}: unknown keys {sorted(unknown)}")
        for key in _OBJ_KEYS:
            _require(key in entry, f"{where}: missing key {key}")
        _require(isinstance(entry["id"], str) and entry["id"],
                 f"{where}.id: expected a nonempty string")
        try:
            group = FurnitureGroup.from_label(entry["group"])
        except GeometryError:
            raise SchemaError(
                f"{where}.group: unknown furniture group {entry['group']!r}; "
                f"valid: {[g.label for g in FurnitureGroup]}") from None
        bbox_doc = entry["bbox"]
        _require(isinstance(bbox_doc, dict), f"{where}.bbox: expected an object")
        unknown = set(bbox_doc) - _BBOX_KEYS
        _require(not unknown, f"{where}.bbox: unknown keys {sorted(unknown)}")
        lo = _check_point(bbox_doc.get("min"), f"{where}.bbox.min", 3)
        hi = _check_point(bbox_doc.get("max"), f"{where}.bbox.max", 3)
        for axis in range(3):
            _require(lo[axis] <= hi[axis],
                     f"{where}.bbox: min[{axis}] > max[{axis}] "
                     f"({lo[axis]} > {hi[axis]})")
        objects.append(SceneObject(entry["id"], group, BoundingBox3(tuple(lo), tuple(hi))))

    try:
        return Scene(scene_id, doc["room_type"], walls_from_loop(loop), tuple(objects))
    except GeometryError as e:
        raise SchemaError(str(e)) from e


def scene_to_doc(scene: Scene) -> dict:
    loop = [list(w.start) for w in scene.walls]
    loop.append(list(scene.walls[0].start))
    return {
        "schema_version": SCHEMA_VERSION,
        "id": scene.id,
        "room_type": scene.room_type,
        "walls": loop,
        "objects": [
            {
                "id": o.id,
                "group": o.group.label,
                "bbox": {"min": list(o.bbox.min), "max": list(o.bbox.max)},
            }
            for o in scene.objects
        ],
    }


def load_scene(path: Path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from e
    try:
        return scene_from_doc(doc)
    except SchemaError as e:
        raise SchemaError(f"{path}: {e}") from e


def save_scene(scene: Scene, path: Path) -> None:
    atomic_write_text(Path(path),
                      json.dumps(scene_to_doc(scene), indent=2, sort_keys=True) + "\n")


def load_scene_dir(path: Path) -> list[Scene]:
    """All *.json scenes in a directory, sorted by filename for determinism."""
    path = Path(path)
    if not path.is_dir():
        raise SchemaError(f"{path} is not a directory")
    files = sorted(path.glob("*.json"))
    if not files:
        raise SchemaError(f"{path} contains no *.json scene files")
    return [load_scene(f) for f in files]


def save_scene_dir(scenes: list[Scene], path: Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, scene in enumerate(scenes):
        save_scene(scene, path / f"{i:05d}_{_safe_name(scene.id)}.json")


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)[:80]
