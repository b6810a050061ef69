"""Exception hierarchy shared across the package."""


class SceneFitError(Exception):
    """Base class for all scenefit errors."""


class SchemaError(SceneFitError):
    """A scene file, config file, or model bundle violates its schema."""


class GeometryError(SceneFitError):
    """Degenerate or inconsistent geometry (bad polygon, inverted box, ...)."""


class ShapeError(SceneFitError):
    """Tensor shape mismatch in the neural stack."""


class TrainingError(SceneFitError):
    """A training pipeline was invoked on unusable data."""


class SaturatedRoomError(SceneFitError):
    """Rejection sampling could not find a free spot in the room."""
