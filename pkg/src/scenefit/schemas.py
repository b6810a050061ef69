"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class BBoxModel(BaseModel):
    min: list[float] = Field(min_length=3, max_length=3)
    max: list[float] = Field(min_length=3, max_length=3)


class SceneObjectModel(BaseModel):
    id: str
    group: str
    bbox: BBoxModel


class SceneModel(BaseModel):
    """Mirrors the scene file schema; deep invariants are enforced by the
    same validator the CLI uses."""

    schema_version: int = 1
    id: str
    room_type: str
    walls: list[list[float]]
    objects: list[SceneObjectModel] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    version: str
    groups: list[str]


class ValidateRequest(BaseModel):
    scene: dict[str, Any]


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str] = Field(default_factory=list)


class PlacementSpec(BaseModel):
    group: str
    dims: list[float] = Field(min_length=3, max_length=3)
    center: list[float] = Field(min_length=2, max_length=2)


class SummaryRequest(BaseModel):
    scene: SceneModel
    object_id: Optional[str] = None
    placement: Optional[PlacementSpec] = None


class SummaryResponse(BaseModel):
    values: list[float]
    blocks: dict[str, list[float]]


class GraphRequest(BaseModel):
    scene: SceneModel
    object_id: Optional[str] = None
    placement: Optional[PlacementSpec] = None


class GraphEdge(BaseModel):
    relation: str
    source: str
    target: str


class GraphResponse(BaseModel):
    target: str
    edges: list[GraphEdge]


class ScoreRequest(BaseModel):
    scene: SceneModel
    group: str
    dims: list[float] = Field(min_length=3, max_length=3)
    center: list[float] = Field(min_length=2, max_length=2)


class ScoreResponse(BaseModel):
    plausibility: float


class PlaceRequest(BaseModel):
    scene: SceneModel
    group: str
    dims: list[float] = Field(min_length=3, max_length=3)
    cell_size: float = 0.1
    k: int = 5
    nms_radius: Optional[float] = None
    include_map: bool = False


class Proposal(BaseModel):
    rank: int
    x: float
    y: float
    prob: float


class PlaceResponse(BaseModel):
    origin: list[float]
    cell_size: float
    nx: int
    ny: int
    top_k: list[Proposal]
    probs: Optional[list[list[Optional[float]]]] = None
