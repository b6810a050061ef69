"""Deterministic on-disk format for named parameter tensors.

Two files per store: <name>.bin holds the row-major little-endian float64
values of every tensor back to back; <name>.json is the manifest listing
format version, tensor names, shapes, and byte offsets, plus any caller
metadata. Byte-for-byte reproducible for identical inputs (no timestamps).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..errors import SchemaError

FORMAT_VERSION = 1


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def save_tensors(prefix: Path, tensors: dict[str, np.ndarray],
                 metadata: dict | None = None) -> None:
    """Write tensors to <prefix>.bin + <prefix>.json atomically."""
    prefix = Path(prefix)
    entries = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        raw = arr.astype("<f8").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "dtype": "<f8",
        "total_bytes": offset,
        "tensors": entries,
    }
    if metadata:
        manifest["metadata"] = metadata
    atomic_write_bytes(prefix.with_suffix(".bin"), b"".join(blobs))
    atomic_write_text(prefix.with_suffix(".json"),
                      json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_tensors(prefix: Path) -> tuple[dict[str, np.ndarray], dict]:
    """Read back (tensors, metadata) written by save_tensors."""
    prefix = Path(prefix)
    try:
        manifest = json.loads(prefix.with_suffix(".json").read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"unreadable tensor manifest {prefix}.json: {e}") from e
    if manifest.get("format_version") != FORMAT_VERSION:
        raise SchemaError(
            f"unsupported tensor format version {manifest.get('format_version')}")
    raw = prefix.with_suffix(".bin").read_bytes()
    if len(raw) != manifest["total_bytes"]:
        raise SchemaError(
            f"tensor blob {prefix}.bin is {len(raw)} bytes, "
            f"manifest says {manifest['total_bytes']}")
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count,
                            offset=entry["offset"]).reshape(shape)
        tensors[entry["name"]] = arr.astype(np.float64)
    return tensors, manifest.get("metadata", {})
