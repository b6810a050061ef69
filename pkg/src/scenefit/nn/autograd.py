"""Minimal dense reverse-mode differentiation engine on numpy float64 arrays.

Just the operations the placement networks need: affine maps, ReLU family,
exp, elementwise arithmetic, row gather/scatter for graph message passing,
column concatenation, reductions, and inverted dropout. Every op records a
closure on a tape; backward() replays the tape in reverse topological order.

Tensors reject non-finite values on construction, so a NaN/Inf anywhere in a
forward pass fails loudly at the op that produced it.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


class Tensor:
    """A numpy array plus the tape bookkeeping needed for backward()."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False,
                 _parents: tuple = (), _backward=None):
        arr = np.asarray(data, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise FloatingPointError("non-finite value entering the tape")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Accumulate gradients of this (scalar) tensor into the whole tape."""
        if self.data.size != 1:
            raise ShapeError("backward() expects a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Convenience operator sugar used by the layer code.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def const(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else const(x)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(f"matmul {a.data.shape} @ {b.data.shape}")

    def backward(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return Tensor(a.data @ b.data, _parents=(a, b), _backward=backward)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to the shape of a broadcast operand."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return Tensor(a.data + b.data, _parents=(a, b), _backward=backward)


def sub(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return Tensor(a.data - b.data, _parents=(a, b), _backward=backward)


def mul(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return Tensor(a.data * b.data, _parents=(a, b), _backward=backward)


def divide(a: Tensor, b: Tensor) -> Tensor:

    def backward(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return Tensor(a.data / b.data, _parents=(a, b), _backward=backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        _accum(a, g * mask)

    return Tensor(np.where(mask, a.data, 0.0), _parents=(a,), _backward=backward)


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    mask = a.data > 0

    def backward(g):
        _accum(a, g * np.where(mask, 1.0, slope))

    return Tensor(np.where(mask, a.data, slope * a.data),
                  _parents=(a,), _backward=backward)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def backward(g):
        _accum(a, g * out_data)

    return Tensor(out_data, _parents=(a,), _backward=backward)


def square(a: Tensor) -> Tensor:

    def backward(g):
        _accum(a, g * 2.0 * a.data)

    return Tensor(a.data * a.data, _parents=(a,), _backward=backward)


def sum_all(a: Tensor) -> Tensor:

    def backward(g):
        _accum(a, np.full_like(a.data, float(g)))

    return Tensor(a.data.sum(), _parents=(a,), _backward=backward)


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size

    def backward(g):
        _accum(a, np.full_like(a.data, float(g) / n))

    return Tensor(a.data.mean(), _parents=(a,), _backward=backward)


def row_sum(a: Tensor) -> Tensor:
    """Sum along axis 1, keeping a (rows, 1) column."""

    def backward(g):
        _accum(a, np.broadcast_to(g, a.data.shape).copy())

    return Tensor(a.data.sum(axis=1, keepdims=True), _parents=(a,), _backward=backward)


def concat_cols(parts: list[Tensor]) -> Tensor:
    widths = [p.data.shape[1] for p in parts]

    def backward(g):
        off = 0
        for p, w in zip(parts, widths):
            _accum(p, g[:, off:off + w])
            off += w

    return Tensor(np.concatenate([p.data for p in parts], axis=1),
                  _parents=tuple(parts), _backward=backward)


def concat_rows(parts: list[Tensor]) -> Tensor:
    heights = [p.data.shape[0] for p in parts]

    def backward(g):
        off = 0
        for p, h in zip(parts, heights):
            _accum(p, g[off:off + h])
            off += h

    return Tensor(np.concatenate([p.data for p in parts], axis=0),
                  _parents=tuple(parts), _backward=backward)


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)

    def backward(g):
        if not a.requires_grad:
            return
        acc = np.zeros_like(a.data)
        np.add.at(acc, idx, g)
        _accum(a, acc)

    return Tensor(a.data[idx], _parents=(a,), _backward=backward)


def segment_sum(a: Tensor, seg: np.ndarray, n_segments: int) -> Tensor:
    """Sum rows of a into n_segments buckets given by seg; missing buckets are 0."""
    seg = np.asarray(seg, dtype=np.int64)
    out = np.zeros((n_segments,) + a.data.shape[1:])
    np.add.at(out, seg, a.data)

    def backward(g):
        _accum(a, g[seg])

    return Tensor(out, _parents=(a,), _backward=backward)


def segment_softmax(scores: Tensor, seg: np.ndarray, n_segments: int) -> Tensor:
    """Softmax over rows sharing a segment id, columns independent.

    The per-segment max is subtracted as a constant; softmax is shift
    invariant so gradients are unaffected and exp stays in range.
    """
    seg = np.asarray(seg, dtype=np.int64)
    seg_max = np.full((n_segments,) + scores.data.shape[1:], -np.inf)
    np.maximum.at(seg_max, seg, scores.data)
    shifted = sub(scores, const(seg_max[seg]))
    e = exp(shifted)
    denom = segment_sum(e, seg, n_segments)
    return divide(e, gather_rows(denom, seg))


def dropout(a: Tensor, p: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: survivors scale by 1/(1-p); eval mode is the identity."""
    if not training or p <= 0.0:
        return a
    if p >= 1.0:
        raise ValueError("dropout rate must be < 1")
    mask = (rng.random(a.data.shape) >= p) / (1.0 - p)
    return mul(a, const(mask))
