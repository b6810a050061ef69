"""Turning candidate placements into network inputs.

A PlacementEncoding bundles the six relation graphs (as plain arrays) and the
raw 48-D summary vector for one candidate placement. encode_placement builds
it through the reference geometry code; encode_grid produces the same
encodings for many candidate centers at once with vectorized kernels, which
is what makes probability maps over thousands of grid cells affordable.

Hypothetical candidates rest on the floor unless their footprint overlaps an
object low enough to act as a support surface, in which case they rest half a
support-tolerance above its top so the support relation actually fires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .features import (
    OFF_3C,
    OFF_AD,
    OFF_CB,
    OFF_EB,
    OFF_IX,
    OFF_SB,
    OFF_SBY,
    OFF_STO,
    SUMMARY_DIM,
    FeatureParams,
    summary_vector,
    wall_rho,
)
from .geometry import (
    GROUP_COUNT,
    BoundingBox3,
    FurnitureGroup,
    Scene,
    SceneObject,
    point_in_polygon,
    segment_rect_distances,
)
from .graphs import (
    NODE_DIM,
    default_node_feature,
    extract_graphs,
    floor_node_feature,
    wall_node_feature,
)

CANDIDATE_ID = "__candidate__"
DEFAULT_MAX_SUPPORT_HEIGHT = 1.2


@dataclass
class PlacementEncoding:
    """Arrays for one placement: per-relation node features (target at row 0),
    per-relation edges into the target, and the raw summary vector."""

    rel_feats: tuple[np.ndarray, ...]
    rel_edges: tuple[np.ndarray, ...]
    summary: np.ndarray


def resolve_bottom_z(scene: Scene, footprint: tuple[float, float, float, float],
                     support_tau: float,
                     max_support_height: float = DEFAULT_MAX_SUPPORT_HEIGHT) -> float:
    """Resting height for a hypothetical footprint: half a support tolerance
    above the highest overlapped surface below max_support_height, else 0."""
    fx0, fy0, fx1, fy1 = footprint
    tops = [
        o.bbox.max[2]
        for o in scene.objects
        if o.bbox.max[2] <= max_support_height
        and fx0 <= o.bbox.max[0] and o.bbox.min[0] <= fx1
        and fy0 <= o.bbox.max[1] and o.bbox.min[1] <= fy1
    ]
    if not tops:
        return 0.0
    return max(tops) + support_tau / 2.0


def candidate_object(scene: Scene, group: FurnitureGroup,
                     dims: tuple[float, float, float],
                     center: tuple[float, float], params: FeatureParams,
                     max_support_height: float = DEFAULT_MAX_SUPPORT_HEIGHT) -> SceneObject:
    length, width, height = dims
    cx, cy = center
    footprint = (cx - length / 2, cy - width / 2, cx + length / 2, cy + width / 2)
    bottom = resolve_bottom_z(scene, footprint, params.support_tau, max_support_height)
    return SceneObject(CANDIDATE_ID, group,
                       BoundingBox3.from_center(cx, cy, length, width, height, bottom))


def encode_placement(scene: Scene, group: FurnitureGroup,
                     dims: tuple[float, float, float], center: tuple[float, float],
                     params: FeatureParams,
                     max_support_height: float = DEFAULT_MAX_SUPPORT_HEIGHT,
                     validate: bool = True) -> PlacementEncoding:
    """Reference (scalar) encoder for one candidate placement."""
    if validate and not point_in_polygon(center[0], center[1], scene.floor_polygon):
        raise GeometryError(
            f"placement center {center} lies outside the floor of scene {scene.id!r}")
    cand = candidate_object(scene, group, dims, center, params, max_support_height)
    gs = extract_graphs(cand, scene, params)
    summary = summary_vector(cand, scene, params)
    return PlacementEncoding(
        rel_feats=tuple(g.feats for g in gs.graphs),
        rel_edges=tuple(g.edges for g in gs.graphs),
        summary=summary,
    )


def _edges_into_target(n_nodes: int) -> np.ndarray:
    return np.array([[i, 0] for i in range(1, n_nodes)], dtype=np.int64)


def encode_grid(scene: Scene, group: FurnitureGroup,
                dims: tuple[float, float, float], centers: np.ndarray,
                params: FeatureParams,
                max_support_height: float = DEFAULT_MAX_SUPPORT_HEIGHT) -> list[PlacementEncoding]:
    """Vectorized encoder for many candidate centers (assumed inside the floor).

    Produces exactly what encode_placement produces per center; the
    feature arithmetic mirrors the scalar path operation for operation so the
    integer-valued blocks agree exactly.
    """
    centers = np.asarray(centers, dtype=np.float64)
    n = len(centers)
    if n == 0:
        return []
    length, width, height = dims
    eps = np.sqrt(length * length + width * width)

    objs = sorted(scene.objects, key=lambda o: o.id)
    m = len(objs)
    omin = np.array([o.bbox.min for o in objs]).reshape(m, 3)
    omax = np.array([o.bbox.max for o in objs]).reshape(m, 3)
    ogroup = np.array([o.group.value for o in objs], dtype=np.int64)

    cx, cy = centers[:, 0], centers[:, 1]
    rx0, ry0 = cx - length / 2, cy - width / 2
    rx1, ry1 = cx + length / 2, cy + width / 2

    # Footprint overlap (touching counts) and resting height.
    if m:
        overlap = ((rx0[:, None] <= omax[None, :, 0]) & (omin[None, :, 0] <= rx1[:, None])
                   & (ry0[:, None] <= omax[None, :, 1]) & (omin[None, :, 1] <= ry1[:, None]))
        support_surface = overlap & (omax[None, :, 2] <= max_support_height)
        masked_tops = np.where(support_surface, omax[None, :, 2], -np.inf)
        best_top = masked_tops.max(axis=1)
        bottom = np.where(np.isinf(best_top), 0.0, best_top + params.support_tau / 2.0)
    else:
        overlap = np.zeros((n, 0), dtype=bool)
        bottom = np.zeros(n)
    top = bottom + height

    # Box distances candidate -> each object, same gap arithmetic as
    # geometry.bbox_distance with the candidate as first operand.
    if m:
        cmin = np.stack([rx0, ry0, bottom], axis=1)
        cmax = np.stack([rx1, ry1, top], axis=1)
        gap = np.maximum(0.0, np.maximum(cmin[:, None, :] - omax[None, :, :],
                                         omin[None, :, :] - cmax[:, None, :]))
        dist = np.sqrt((gap * gap).sum(axis=2))  # (n, m)
        sigma = dist < eps
        gap_up = bottom[:, None] - omax[None, :, 2]
        gap_down = omin[None, :, 2] - top[:, None]
        psi_by = overlap & (0.0 < gap_up) & (gap_up < params.support_tau)
        psi_to = overlap & (0.0 < gap_down) & (gap_down < params.support_tau)
    else:
        dist = np.zeros((n, 0))
        sigma = psi_by = psi_to = np.zeros((n, 0), dtype=bool)

    # Wall distances and predicates.
    rects = np.stack([rx0, ry0, rx1, ry1], axis=1)
    wall_d = np.stack(
        [segment_rect_distances(w.start, w.end, rects) for w in scene.walls], axis=1)
    rho = np.array([wall_rho(scene, w, params) for w in scene.walls])
    phi = wall_d < rho[None, :]
    wall_hits = (wall_d == 0.0).sum(axis=1)
    n_near = phi.sum(axis=1)

    # Distance ordering: rank 1..m over objects (already id-sorted, stable).
    order = np.argsort(dist, axis=1, kind="stable")
    ranks = np.empty((n, m), dtype=np.int64)
    rows = np.arange(n)[:, None]
    ranks[rows, order] = np.arange(1, m + 1)[None, :]

    # Summary blocks.
    summary = np.zeros((n, SUMMARY_DIM))
    sorted_codes = ogroup[order] + 1 if m else np.zeros((n, 0), dtype=np.int64)
    for j in range(min(3, m)):
        summary[:, OFF_3C + j] = sorted_codes[:, j]
    summary[:, OFF_EB] = (n_near == 1).astype(float)
    summary[:, OFF_CB] = (n_near >= 2).astype(float)
    for g in range(GROUP_COUNT):
        sel = ogroup == g
        cnt = int(sel.sum())
        if cnt:
            summary[:, OFF_AD + g] = dist[:, sel].sum(axis=1) / cnt
            summary[:, OFF_SB + g] = sigma[:, sel].sum(axis=1)
            summary[:, OFF_IX + g] = overlap[:, sel].sum(axis=1)
            summary[:, OFF_SBY + g] = psi_by[:, sel].sum(axis=1)
            summary[:, OFF_STO + g] = psi_to[:, sel].sum(axis=1)
    summary[:, OFF_IX + GROUP_COUNT] = wall_hits

    # Node features: per-object one-hot base plus per-candidate rank column.
    base = np.zeros((m, NODE_DIM))
    if m:
        base[np.arange(m), ogroup] = 1.0
    target_base = np.zeros(NODE_DIM)
    target_base[group.value] = 1.0
    room_rank = float(m + 1)
    wall_feat = wall_node_feature(int(room_rank))
    floor_feat = floor_node_feature(int(room_rank))
    default_feat = default_node_feature()

    encodings = []
    for i in range(n):
        obj_feats = base.copy()
        if m:
            obj_feats[:, NODE_DIM - 1] = ranks[i]
        feats_list = []
        edges_list = []
        for rel, mask in (("IX", overlap[i]), ("SB", sigma[i]), ("SBY", psi_by[i]),
                          ("STO", psi_to[i]), ("RP", None), ("CO", None)):
            trow = target_base.copy()
            trow[NODE_DIM - 1] = 0.0
            if rel == "RP":
                near = np.nonzero(phi[i])[0]
                if len(near):
                    feats = np.vstack([trow, np.tile(wall_feat, (len(near), 1))])
                else:
                    feats = np.vstack([trow, floor_feat])
            elif rel == "CO":
                if m:
                    feats = np.vstack([trow, obj_feats])
                else:
                    feats = np.vstack([trow, default_feat])
            else:
                sel = np.nonzero(mask)[0]
                if len(sel):
                    feats = np.vstack([trow, obj_feats[sel]])
                else:
                    feats = np.vstack([trow, default_feat])
            feats_list.append(feats)
            edges_list.append(_edges_into_target(len(feats)))
        encodings.append(PlacementEncoding(tuple(feats_list), tuple(edges_list),
                                           summary[i]))
    return encodings

