"""Network building blocks: fully connected stacks and the multi-head graph
attention layer used on the relation scene graphs."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from . import autograd as ag
from .autograd import Tensor


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: tuple) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Linear:
    """y = x @ w + b."""

    def __init__(self, w: Tensor, b: Tensor):
        self.w = w
        self.b = b

    @classmethod
    def create(cls, in_dim: int, out_dim: int, rng: np.random.Generator) -> "Linear":
        w = ag.parameter(glorot_uniform(rng, in_dim, out_dim, (in_dim, out_dim)))
        b = ag.parameter(np.zeros(out_dim))
        return cls(w, b)

    @property
    def in_dim(self) -> int:
        return self.w.data.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w.data.shape[1]

    def __call__(self, x: Tensor) -> Tensor:
        return ag.add(ag.matmul(x, self.w), self.b)


class MLP:
    """Affine + ReLU per layer, final layer linear."""

    def __init__(self, layers: list[Linear]):
        self.layers = layers

    @classmethod
    def create(cls, widths: list[int], rng: np.random.Generator) -> "MLP":
        if len(widths) < 2:
            raise ShapeError("an MLP needs at least one layer")
        return cls([Linear.create(widths[i], widths[i + 1], rng)
                    for i in range(len(widths) - 1)])

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            if x.data.shape[1] != layer.in_dim:
                raise ShapeError(
                    f"layer {i}: expected {layer.in_dim} input dims, "
                    f"got {x.data.shape[1]}")
            x = layer(x)
            if i < len(self.layers) - 1:
                x = ag.relu(x)
        return x

    def parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for i, layer in enumerate(self.layers):
            out.append((f"{i}.w", layer.w))
            out.append((f"{i}.b", layer.b))
        return out


class GraphAttention:
    """Single multi-head attention layer over a directed graph.

    Per head h with projection W_h: scores for edge (src -> dst) are
    LeakyReLU(a_dst . W_h x_dst + a_src . W_h x_src), softmax-normalized over
    each node's incoming edges; the node output concatenates all heads'
    attention-weighted sums of incoming W_h x_src. Attention coefficients are
    dropped out at train time (inverted scaling). Nodes with no incoming edges
    output zeros.
    """

    def __init__(self, w: Tensor, a_src: Tensor, a_dst: Tensor,
                 heads: int, head_dim: int,
                 attn_dropout: float = 0.8, leaky_slope: float = 0.2):
        self.w = w
        self.a_src = a_src
        self.a_dst = a_dst
        self.heads = heads
        self.head_dim = head_dim
        self.attn_dropout = attn_dropout
        self.leaky_slope = leaky_slope
        # Constant head bookkeeping matrices: pool sums each head's block,
        # expand copies one column per head across its block.
        pool = np.zeros((heads * head_dim, heads))
        for h in range(heads):
            pool[h * head_dim:(h + 1) * head_dim, h] = 1.0
        self._pool = ag.const(pool)
        self._expand = ag.const(pool.T.copy())

    @classmethod
    def create(cls, in_dim: int, heads: int, head_dim: int,
               rng: np.random.Generator, attn_dropout: float = 0.8,
               leaky_slope: float = 0.2) -> "GraphAttention":
        width = heads * head_dim
        w = ag.parameter(glorot_uniform(rng, in_dim, width, (in_dim, width)))
        a_src = ag.parameter(glorot_uniform(rng, 2 * head_dim, 1, (width,)))
        a_dst = ag.parameter(glorot_uniform(rng, 2 * head_dim, 1, (width,)))
        return cls(w, a_src, a_dst, heads, head_dim, attn_dropout, leaky_slope)

    @property
    def out_dim(self) -> int:
        return self.heads * self.head_dim

    def __call__(self, feats: Tensor, edges: np.ndarray, training: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        if len(edges) == 0:
            raise ShapeError("graph attention on a graph with no edges")
        if feats.data.shape[1] != self.w.data.shape[0]:
            raise ShapeError(
                f"graph attention expected {self.w.data.shape[0]} input dims, "
                f"got {feats.data.shape[1]}")
        n = feats.data.shape[0]
        src = np.asarray(edges, dtype=np.int64)[:, 0]
        dst = np.asarray(edges, dtype=np.int64)[:, 1]

        wh = ag.matmul(feats, self.w)                              # (n, H*D)
        s_src = ag.matmul(ag.mul(wh, self.a_src), self._pool)      # (n, H)
        s_dst = ag.matmul(ag.mul(wh, self.a_dst), self._pool)      # (n, H)
        scores = ag.leaky_relu(
            ag.add(ag.gather_rows(s_dst, dst), ag.gather_rows(s_src, src)),
            self.leaky_slope)                                      # (E, H)
        alpha = ag.segment_softmax(scores, dst, n)                 # (E, H)
        if training:
            if rng is None:
                raise ValueError("training-mode attention needs an rng")
            alpha = ag.dropout(alpha, self.attn_dropout, rng, training=True)
        alpha_full = ag.matmul(alpha, self._expand)                # (E, H*D)
        weighted = ag.mul(alpha_full, ag.gather_rows(wh, src))
        return ag.segment_sum(weighted, dst, n)                    # (n, H*D)

    def attention_weights(self, feats: np.ndarray, edges: np.ndarray) -> np.ndarray:
        """Eval-mode attention coefficients (E, heads), for diagnostics."""
        src = np.asarray(edges, dtype=np.int64)[:, 0]
        dst = np.asarray(edges, dtype=np.int64)[:, 1]
        n = feats.shape[0]
        wh = np.asarray(feats, dtype=np.float64) @ self.w.data
        pool = self._pool.data
        s_src = (wh * self.a_src.data) @ pool
        s_dst = (wh * self.a_dst.data) @ pool
        scores = s_dst[dst] + s_src[src]
        scores = np.where(scores > 0, scores, self.leaky_slope * scores)
        seg_max = np.full((n, self.heads), -np.inf)
        np.maximum.at(seg_max, dst, scores)
        e = np.exp(scores - seg_max[dst])
        denom = np.zeros((n, self.heads))
        np.add.at(denom, dst, e)
        return e / denom[dst]

    def parameters(self) -> list[tuple[str, Tensor]]:
        return [("w", self.w), ("a_src", self.a_src), ("a_dst", self.a_dst)]
