"""Minimal dense-tensor reverse-mode differentiation.

A Tensor wraps a float64 ndarray plus, when it participates in
differentiation, links to its parents and a closure producing the parents'
gradient contributions. ``backward`` walks the recorded graph once in reverse
topological order, accumulating into ``.grad``.

Only the operations this package needs are provided; all of them are dense
and deterministic. Hinge-style kinks (relu, prelu at 0) use the subgradient 0.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, ShapeError


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, value, requires_grad: bool = False, _parents=(), _backward_fn=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._backward_fn = _backward_fn

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(value) -> Tensor:
    return Tensor(value, requires_grad=True)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _node(value, parents, backward_fn) -> Tensor:
    requires = any(p.requires_grad for p in parents)
    if not requires:
        return Tensor(value)
    return Tensor(value, requires_grad=True, _parents=tuple(parents), _backward_fn=backward_fn)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    value = a.value + b.value

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(value, (a, b), backward_fn)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    value = a.value - b.value

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _node(value, (a, b), backward_fn)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    value = a.value * b.value

    def backward_fn(g):
        return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

    return _node(value, (a, b), backward_fn)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _node(-a.value, (a,), lambda g: (-g,))


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)
    factor = float(factor)
    return _node(a.value * factor, (a,), lambda g: (g * factor,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise ShapeError("matmul expects 2-d tensors")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes {a.shape} and {b.shape} do not chain")
    value = a.value @ b.value

    def backward_fn(g):
        return g @ b.value.T, a.value.T @ g

    return _node(value, (a, b), backward_fn)


def block_matmul(blocks: np.ndarray, h) -> Tensor:
    """Multiply row blocks of ``h`` by constant square blocks.

    blocks: (n_blocks, k, k) constants; h: (n_blocks * k, d).
    Output row block i is blocks[i] @ h_block_i.
    """
    h = as_tensor(h)
    n_blocks, k, k2 = blocks.shape
    if k != k2 or h.shape[0] != n_blocks * k:
        raise ShapeError(f"block_matmul: blocks {blocks.shape} incompatible with h {h.shape}")
    d = h.shape[1]
    value = np.einsum("bij,bjd->bid", blocks, h.value.reshape(n_blocks, k, d)).reshape(n_blocks * k, d)

    def backward_fn(g):
        gb = np.einsum("bji,bjd->bid", blocks, g.reshape(n_blocks, k, d))
        return (gb.reshape(n_blocks * k, d),)

    return _node(value, (h,), backward_fn)


def sum_all(a) -> Tensor:
    a = as_tensor(a)
    return _node(a.value.sum(), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def sum_axis(a, axis: int) -> Tensor:
    a = as_tensor(a)
    value = a.value.sum(axis=axis)

    def backward_fn(g):
        return (np.expand_dims(g, axis).repeat(a.shape[axis], axis=axis),)

    return _node(value, (a,), backward_fn)


def mean_all(a) -> Tensor:
    a = as_tensor(a)
    return scale(sum_all(a), 1.0 / a.value.size)


def mean_axis(a, axis: int) -> Tensor:
    a = as_tensor(a)
    return scale(sum_axis(a, axis), 1.0 / a.shape[axis])


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return _node(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def take_rows(a, indices: np.ndarray) -> Tensor:
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    value = a.value[indices]

    def backward_fn(g):
        out = np.zeros_like(a.value)
        np.add.at(out, indices, g)
        return (out,)

    return _node(value, (a,), backward_fn)


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0

    def backward_fn(g):
        return (g * mask,)

    return _node(np.where(mask, a.value, 0.0), (a,), backward_fn)


def prelu(a, slope) -> Tensor:
    """Parametric relu with a scalar learnable slope on the negative side."""
    a, slope = as_tensor(a), as_tensor(slope)
    if slope.value.ndim != 0:
        raise ShapeError("prelu slope must be a scalar tensor")
    mask = a.value > 0
    value = np.where(mask, a.value, slope.value * a.value)

    def backward_fn(g):
        da = g * np.where(mask, 1.0, slope.value)
        dslope = np.asarray((g * np.where(mask, 0.0, a.value)).sum())
        return da, dslope

    return _node(value, (a, slope), backward_fn)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    value = np.empty_like(a.value)
    pos = a.value >= 0
    value[pos] = 1.0 / (1.0 + np.exp(-a.value[pos]))
    ez = np.exp(a.value[~pos])
    value[~pos] = ez / (1.0 + ez)

    def backward_fn(g):
        return (g * value * (1.0 - value),)

    return _node(value, (a,), backward_fn)


def dot(a, b) -> Tensor:
    return sum_all(mul(a, b))


def row_sq_norm(a) -> Tensor:
    """Per-row squared euclidean norm: (n, d) -> (n,)."""
    a = as_tensor(a)
    return sum_axis(mul(a, a), 1)


def pairwise_euclidean(p, q) -> Tensor:
    """(m, d), (n, d) -> (m, n) euclidean distances. Gradient at coincident
    points is taken as 0."""
    p, q = as_tensor(p), as_tensor(q)
    if p.value.ndim != 2 or q.value.ndim != 2 or p.shape[1] != q.shape[1]:
        raise ShapeError(f"pairwise_euclidean shapes {p.shape} and {q.shape}")
    diff = p.value[:, None, :] - q.value[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))

    def backward_fn(g):
        inv = np.where(dist > 0, 1.0 / np.where(dist > 0, dist, 1.0), 0.0)
        weighted = (g * inv)[:, :, None] * diff
        return weighted.sum(axis=1), -weighted.sum(axis=0)

    return _node(dist, (p, q), backward_fn)


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))
    return order


def backward(root: Tensor) -> None:
    """Reverse-mode sweep from a scalar root; accumulates into ``.grad``."""
    if root.value.shape != ():
        raise ContractError(f"backward root must be a scalar, got shape {root.value.shape}")
    if not root.requires_grad:
        return
    order = _toposort(root)
    for node in order:
        node.grad = None
    root.grad = np.asarray(1.0)
    for node in reversed(order):
        if node._backward_fn is None or node.grad is None:
            continue
        contributions = node._backward_fn(node.grad)
        for parent, contrib in zip(node._parents, contributions):
            if not parent.requires_grad or contrib is None:
                continue
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.value)
            parent.grad = parent.grad + contrib


def gradients(loss: Tensor, params: list[Tensor]) -> list[np.ndarray]:
    """Gradients of a scalar loss for each parameter (zeros when unreachable)."""
    for p in params:
        p.grad = None
    backward(loss)
    return [p.grad if p.grad is not None else np.zeros_like(p.value) for p in params]
