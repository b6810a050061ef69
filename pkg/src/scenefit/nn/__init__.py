"""Hand-rolled reverse-mode differentiation core and the layers the placement
networks are built from."""

from . import autograd
from .autograd import Tensor, const, parameter
from .layers import GraphAttention, Linear, MLP, glorot_uniform
from .losses import contrastive_loss, contrastive_loss_batch, mse
from .optim import Adam
from .serialize import atomic_write_bytes, atomic_write_text, load_tensors, save_tensors

__all__ = [
    "Adam",
    "GraphAttention",
    "Linear",
    "MLP",
    "Tensor",
    "atomic_write_bytes",
    "atomic_write_text",
    "autograd",
    "const",
    "contrastive_loss",
    "contrastive_loss_batch",
    "glorot_uniform",
    "load_tensors",
    "mse",
    "parameter",
    "save_tensors",
]
