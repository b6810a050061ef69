"""HTTP inference service wrapping the core package.

Model bundles load once at startup and serve any number of clients; scoring
against a loaded model is read-only, so concurrent requests are safe. Train
and augment stay CLI-side: they are batch jobs, not request/response work.

Endpoints:
    GET  /health                 liveness + which group models are loaded
    POST /scenes/validate        schema-check a scene document
    POST /features/summary       48-D summary vector for an object/placement
    POST /graphs/extract         relation graph adjacency for an object/placement
    POST /placements/score       plausibility of one candidate placement
    POST /placements/map         probability map + top-k proposals
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

from fastapi import FastAPI, HTTPException

from . import __version__
from .bundle import load_model_bundle
from .config import RunConfig
from .errors import GeometryError, SceneFitError, SchemaError
from .evaluate import ModelScorer, probability_map, top_k
from .features import (
    OFF_AD,
    OFF_CB,
    OFF_EB,
    OFF_IX,
    OFF_SB,
    OFF_SBY,
    OFF_STO,
    summary_vector,
)
from .geometry import FurnitureGroup, Scene
from .graphs import extract_graphs
from .model import GroupModel
from .sceneio import scene_from_doc
from .schemas import (
    GraphEdge,
    GraphRequest,
    GraphResponse,
    HealthResponse,
    PlaceRequest,
    PlaceResponse,
    Proposal,
    ScoreRequest,
    ScoreResponse,
    SummaryRequest,
    SummaryResponse,
    ValidateRequest,
    ValidateResponse,
)

log = logging.getLogger(__name__)

_BLOCKS = (("3C", 0, 3), ("EB", OFF_EB, OFF_EB + 1), ("CB", OFF_CB, OFF_CB + 1),
           ("AD", OFF_AD, OFF_AD + 8), ("SB", OFF_SB, OFF_SB + 8),
           ("IX", OFF_IX, OFF_IX + 9), ("SBY", OFF_SBY, OFF_SBY + 9),
           ("STO", OFF_STO, OFF_STO + 9))


def _parse_scene(doc: dict) -> Scene:
    try:
        return scene_from_doc(doc)
    except SchemaError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e


def _parse_group(label: str) -> FurnitureGroup:
    try:
        return FurnitureGroup.from_label(label)
    except GeometryError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e


def _resolve_query_object(scene: Scene, req, config: RunConfig):
    """An existing object (by id, removed from its context) or a hypothetical
    placement spec."""
    from .encode import candidate_object

    if (req.object_id is None) == (req.placement is None):
        raise HTTPException(status_code=400,
                            detail="provide exactly one of object_id or placement")
    if req.object_id is not None:
        matches = [o for o in scene.objects if o.id == req.object_id]
        if not matches:
            raise HTTPException(status_code=404,
                                detail=f"no object {req.object_id!r} in scene")
        return matches[0], scene.without(req.object_id)
    spec = req.placement
    group = _parse_group(spec.group)
    try:
        cand = candidate_object(scene, group, tuple(spec.dims), tuple(spec.center),
                                config.feature, config.grid.max_support_height)
    except (GeometryError, SceneFitError) as e:
        raise HTTPException(status_code=400, detail=str(e)) from e
    return cand, scene


def create_app(model_dir: str | Path | None = None,
               config: RunConfig | None = None) -> FastAPI:
    from contextlib import asynccontextmanager

    config = config or RunConfig()
    models: dict[FurnitureGroup, GroupModel] = {}

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if model_dir is None:
            log.warning("no model directory configured; scoring endpoints limited "
                        "to validation and feature extraction")
        else:
            models.update(load_model_bundle(model_dir))
            log.info("loaded models: %s", sorted(g.label for g in models))
        yield

    app = FastAPI(title="scenefit", version=__version__,
                  description="Contextual furniture placement scoring",
                  lifespan=lifespan)

    def _model_for(group: FurnitureGroup) -> GroupModel:
        if group not in models:
            raise HTTPException(
                status_code=404,
                detail=f"no model loaded for group {group.label}; "
                       f"available: {sorted(g.label for g in models)}")
        return models[group]

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__,
                              groups=sorted(g.label for g in models))

    @app.post("/scenes/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        try:
            scene_from_doc(req.scene)
        except SchemaError as e:
            return ValidateResponse(valid=False, errors=[str(e)])
        return ValidateResponse(valid=True)

    @app.post("/features/summary", response_model=SummaryResponse)
    def features_summary(req: SummaryRequest) -> SummaryResponse:
        scene = _parse_scene(req.scene.model_dump())
        query, context = _resolve_query_object(scene, req, config)
        values = summary_vector(query, context, config.feature)
        blocks = {name: values[a:b].tolist() for name, a, b in _BLOCKS}
        return SummaryResponse(values=values.tolist(), blocks=blocks)

    @app.post("/graphs/extract", response_model=GraphResponse)
    def graphs_extract(req: GraphRequest) -> GraphResponse:
        scene = _parse_scene(req.scene.model_dump())
        query, context = _resolve_query_object(scene, req, config)
        gs = extract_graphs(query, context, config.feature)
        edges = [
            GraphEdge(relation=g.relation, source=g.node_ids[int(s)],
                      target=g.node_ids[int(t)])
            for g in gs.graphs for s, t in g.edges
        ]
        return GraphResponse(target=gs.target_id, edges=edges)

    @app.post("/placements/score", response_model=ScoreResponse)
    def placements_score(req: ScoreRequest) -> ScoreResponse:
        scene = _parse_scene(req.scene.model_dump())
        group = _parse_group(req.group)
        model = _model_for(group)
        try:
            y = model.project(scene, tuple(req.dims), tuple(req.center))
        except GeometryError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return ScoreResponse(plausibility=model.plausibility(y))

    @app.post("/placements/map", response_model=PlaceResponse)
    def placements_map(req: PlaceRequest) -> PlaceResponse:
        scene = _parse_scene(req.scene.model_dump())
        group = _parse_group(req.group)
        model = _model_for(group)
        if req.cell_size <= 0 or req.k < 1:
            raise HTTPException(status_code=400,
                                detail="cell_size must be positive and k >= 1")
        dims = tuple(req.dims)
        radius = req.nms_radius if req.nms_radius is not None \
            else math.hypot(dims[0], dims[1]) / 2.0
        pmap = probability_map(ModelScorer(model), scene, group, dims, req.cell_size)
        try:
            picks = top_k(pmap, req.k, radius)
        except GeometryError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        ny, nx = pmap.shape
        probs = None
        if req.include_map:
            probs = [
                [float(pmap.probs[iy, ix]) if pmap.mask[iy, ix] else None
                 for ix in range(nx)]
                for iy in range(ny)
            ]
        return PlaceResponse(
            origin=list(pmap.origin), cell_size=pmap.cell_size, nx=nx, ny=ny,
            top_k=[Proposal(rank=i + 1, x=x, y=y, prob=p)
                   for i, (x, y, p) in enumerate(picks)],
            probs=probs,
        )

    return app
