"""scenefit: contextual furniture placement scoring for indoor scenes.

Scores how plausibly an object of a given furniture group sits at a candidate
position in a semantically labeled room, using spatial-relationship features,
per-relation scene-graph attention, a Siamese-trained projection, and an
autoencoder anomaly score. Ships a parametric data-augmentation pipeline, an
object-removal evaluation harness, a CLI, and an HTTP inference service.
"""

__version__ = "0.1.0"

from .errors import (
    GeometryError,
    SaturatedRoomError,
    SceneFitError,
    SchemaError,
    ShapeError,
    TrainingError,
)
from .geometry import (
    GROUPS,
    GROUP_COUNT,
    BoundingBox3,
    FurnitureGroup,
    Scene,
    SceneObject,
    Wall,
    bbox_distance,
    bbox_wall_distance,
    bbox_xy_intersects,
    box_intersection_volume,
    open_space_ratio,
    point_bbox_distance,
    walls_from_loop,
)
from .features import (
    SUMMARY_DIM,
    FeatureParams,
    Standardizer,
    avg_dist,
    intersect_xy_counts,
    room_position,
    summary_vector,
    supp_by_counts,
    supp_to_counts,
    support_sign,
    surrounded_by,
    three_closest,
)
from .graphs import (
    RELATIONS,
    SceneGraph,
    SceneGraphSet,
    distance_ordering,
    extract_graphs,
    graph_dump,
)
from .augment import (
    AugmentParams,
    augment_room,
    build_augmented_dataset,
    check_open_space,
    check_overlaps,
    iterative_removal,
)
from .encode import PlacementEncoding, encode_grid, encode_placement
from .model import (
    GaussianKde,
    GroupModel,
    ModelDims,
    cluster_mean,
    exp_distance_score,
)
from .training import (
    LabeledPlacement,
    TrainConfig,
    TrainLog,
    build_training_set,
    positives_for_group,
    sample_negative,
    train_autoencoder,
    train_group_model,
    train_siamese,
)
from .evaluate import (
    EvalReport,
    ModelScorer,
    PlacementMap,
    UniformRandomScorer,
    probability_map,
    removal_experiment,
    top_k,
)
from .bundle import (
    dataset_fingerprint,
    load_group_model,
    load_model_bundle,
    save_group_model,
    save_model_bundle,
)
from .sceneio import load_scene, load_scene_dir, save_scene, scene_from_doc, scene_to_doc
from .config import RunConfig, load_config

__all__ = [
    "AugmentParams",
    "BoundingBox3",
    "EvalReport",
    "FeatureParams",
    "FurnitureGroup",
    "GROUPS",
    "GROUP_COUNT",
    "GaussianKde",
    "GeometryError",
    "GroupModel",
    "LabeledPlacement",
    "ModelDims",
    "ModelScorer",
    "PlacementEncoding",
    "PlacementMap",
    "RELATIONS",
    "RunConfig",
    "SUMMARY_DIM",
    "SaturatedRoomError",
    "Scene",
    "SceneFitError",
    "SceneGraph",
    "SceneGraphSet",
    "SceneObject",
    "SchemaError",
    "ShapeError",
    "Standardizer",
    "TrainConfig",
    "TrainLog",
    "TrainingError",
    "UniformRandomScorer",
    "Wall",
    "augment_room",
    "avg_dist",
    "bbox_distance",
    "bbox_wall_distance",
    "bbox_xy_intersects",
    "box_intersection_volume",
    "build_augmented_dataset",
    "build_training_set",
    "check_open_space",
    "check_overlaps",
    "cluster_mean",
    "dataset_fingerprint",
    "distance_ordering",
    "encode_grid",
    "encode_placement",
    "exp_distance_score",
    "extract_graphs",
    "graph_dump",
    "intersect_xy_counts",
    "iterative_removal",
    "load_config",
    "load_group_model",
    "load_model_bundle",
    "load_scene",
    "load_scene_dir",
    "open_space_ratio",
    "point_bbox_distance",
    "positives_for_group",
    "probability_map",
    "removal_experiment",
    "room_position",
    "sample_negative",
    "save_group_model",
    "save_model_bundle",
    "save_scene",
    "scene_from_doc",
    "scene_to_doc",
    "summary_vector",
    "supp_by_counts",
    "supp_to_counts",
    "support_sign",
    "surrounded_by",
    "three_closest",
    "top_k",
    "train_autoencoder",
    "train_group_model",
    "train_siamese",
    "walls_from_loop",
]
