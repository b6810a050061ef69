"""Per-relation scene graphs around a (possibly hypothetical) target object.

Six directed homogeneous graphs are built per placement, one per spatial
relation; every edge points INTO the target node, so attention later
aggregates neighborhood context into the target only.

Node features are 11-D: dims 0-7 one-hot furniture group, dim 8 wall flag,
dim 9 floor flag, dim 10 the distance-ordering rank. A zero-feature default
node (rank -1) is added, with an edge to the target, exactly when no other
node qualifies, so every graph is guaranteed at least one incoming edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureParams, footprint_diagonal, near_wall, support_sign
from .geometry import Scene, SceneObject, bbox_distance, bbox_xy_intersects

RELATIONS = ("IX", "SB", "SBY", "STO", "RP", "CO")
NODE_DIM = 11

_WALL_FLAG = 8
_FLOOR_FLAG = 9
_ORDERING = 10

FLOOR_ID = "__floor__"
DEFAULT_ID = "__default__"


def object_node_feature(o: SceneObject, ordering: int) -> np.ndarray:
    f = np.zeros(NODE_DIM)
    f[o.group.value] = 1.0
    f[_ORDERING] = float(ordering)
    return f


def wall_node_feature(ordering: int) -> np.ndarray:
    f = np.zeros(NODE_DIM)
    f[_WALL_FLAG] = 1.0
    f[_ORDERING] = float(ordering)
    return f


def floor_node_feature(ordering: int) -> np.ndarray:
    f = np.zeros(NODE_DIM)
    f[_FLOOR_FLAG] = 1.0
    f[_ORDERING] = float(ordering)
    return f


def default_node_feature() -> np.ndarray:
    f = np.zeros(NODE_DIM)
    f[_ORDERING] = -1.0
    return f


@dataclass(frozen=True)
class SceneGraph:
    """One relation's graph: node features plus edges directed into the target."""

    relation: str
    node_ids: tuple[str, ...]
    feats: np.ndarray          # (n_nodes, 11)
    edges: np.ndarray          # (n_edges, 2) int: (source, target) indices
    target_index: int

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def incoming_sources(self) -> tuple[str, ...]:
        return tuple(self.node_ids[int(s)] for s, t in self.edges
                     if int(t) == self.target_index)


@dataclass(frozen=True)
class SceneGraphSet:
    """The six relation graphs for one target placement, in RELATIONS order."""

    target_id: str
    graphs: tuple[SceneGraph, ...]

    def __post_init__(self) -> None:
        assert tuple(g.relation for g in self.graphs) == RELATIONS

    def __getitem__(self, relation: str) -> SceneGraph:
        return self.graphs[RELATIONS.index(relation)]


def distance_ordering(o: SceneObject, scene: Scene) -> dict[str, int]:
    """Rank of each object by box distance to the target; the target ranks 0.

    Ties break on object id so the ordering is reproducible. Walls and the
    floor sit after every object at rank n+1 (handled by callers).
    """
    others = sorted((x for x in scene.objects if x.id != o.id),
                    key=lambda x: (bbox_distance(o.bbox, x.bbox), x.id))
    ranks = {o.id: 0}
    for i, x in enumerate(others):
        ranks[x.id] = i + 1
    return ranks


def _build_graph(relation: str, target: SceneObject, target_rank: int,
                 sources: list[tuple[str, np.ndarray]]) -> SceneGraph:
    ids = [target.id]
    feats = [object_node_feature(target, target_rank)]
    for node_id, feat in sources:
        ids.append(node_id)
        feats.append(feat)
    if not sources:
        ids.append(DEFAULT_ID)
        feats.append(default_node_feature())
    edges = np.array([[i, 0] for i in range(1, len(ids))], dtype=np.int64)
    return SceneGraph(relation, tuple(ids), np.array(feats), edges, 0)


def extract_graphs(o: SceneObject, scene: Scene, params: FeatureParams) -> SceneGraphSet:
    """Build all six relation graphs for the target object o against the scene.

    Source nodes appear in object-id order so graph layouts are independent
    of the scene's storage order.
    """
    ranks = distance_ordering(o, scene)
    others = sorted((x for x in scene.objects if x.id != o.id), key=lambda x: x.id)
    room_rank = len(others) + 1

    def onode(x: SceneObject) -> tuple[str, np.ndarray]:
        return (x.id, object_node_feature(x, ranks[x.id]))

    eps = footprint_diagonal(o)
    ix = [onode(x) for x in others if bbox_xy_intersects(o.bbox, x.bbox)]
    sb = [onode(x) for x in others if bbox_distance(o.bbox, x.bbox) < eps]
    sby = [onode(x) for x in others if support_sign(o, x, params) == 1]
    sto = [onode(x) for x in others if support_sign(o, x, params) == -1]
    co = [onode(x) for x in others]

    rp = [(w.id, wall_node_feature(room_rank))
          for w in scene.walls if near_wall(o, w, scene, params)]
    if not rp:
        rp = [(FLOOR_ID, floor_node_feature(room_rank))]

    target_rank = ranks[o.id]
    graphs = (
        _build_graph("IX", o, target_rank, ix),
        _build_graph("SB", o, target_rank, sb),
        _build_graph("SBY", o, target_rank, sby),
        _build_graph("STO", o, target_rank, sto),
        _build_graph("RP", o, target_rank, rp),
        _build_graph("CO", o, target_rank, co),
    )
    return SceneGraphSet(o.id, graphs)


def graph_dump(gs: SceneGraphSet) -> str:
    """Plain-text adjacency dump: one line per edge (relation, source, target)."""
    lines = []
    for g in gs.graphs:
        for s, t in g.edges:
            lines.append(f"{g.relation} {g.node_ids[int(s)]} {g.node_ids[int(t)]}")
    return "\n".join(lines) + ("\n" if lines else "")
