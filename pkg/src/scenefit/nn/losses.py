"""Loss functions: max-margin contrastive loss for the Siamese pairs and mean
squared error for the autoencoder."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from . import autograd as ag
from .autograd import Tensor


def squared_distance_rows(y1: Tensor, y2: Tensor) -> Tensor:
    """Row-wise squared L2 distance, shape (rows, 1)."""
    d = ag.sub(y1, y2)
    return ag.row_sum(ag.square(d))


def contrastive_loss(y1: Tensor, y2: Tensor, same_label: bool, margin: float) -> Tensor:
    """Pairwise loss: ||y1-y2||^2 for same labels, max(0, m - ||y1-y2||^2) for
    mixed labels. The clamped branch has zero gradient."""
    if y1.data.shape != y2.data.shape:
        raise ShapeError(f"contrastive pair shapes differ: {y1.shape} vs {y2.shape}")
    same = np.full((y1.data.shape[0], 1), 1.0 if same_label else 0.0)
    return contrastive_loss_batch(y1, y2, same, margin)


def contrastive_loss_batch(y1: Tensor, y2: Tensor, same_mask: np.ndarray,
                           margin: float) -> Tensor:
    """Mean contrastive loss over a batch; same_mask is (rows, 1) in {0,1}."""
    if y1.data.shape != y2.data.shape:
        raise ShapeError(f"contrastive pair shapes differ: {y1.shape} vs {y2.shape}")
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    same = ag.const(np.asarray(same_mask, dtype=np.float64).reshape(-1, 1))
    d2 = squared_distance_rows(y1, y2)                      # (B, 1)
    pull = ag.mul(same, d2)
    push = ag.mul(ag.sub(ag.const(1.0), same), ag.relu(ag.sub(ag.const(margin), d2)))
    return ag.mean_all(ag.add(pull, push))


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean of squared differences over every entry."""
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mse shapes differ: {a.shape} vs {b.shape}")
    return ag.mean_all(ag.square(ag.sub(a, b)))
