"""Tiny reverse-mode automatic differentiation over numpy arrays.

Only the operations the generator, discriminator and losses need are
provided. Graphs are built eagerly; ``Tensor.backward`` walks them in reverse
topological order and accumulates ``.grad`` on every node that requires it.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterable

import numpy as np

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Build no graph inside the block (pure inference)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str = "", dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    # -- construction helpers ------------------------------------------------

    @classmethod
    def _make(cls, data, parents: tuple["Tensor", ...], backward) -> "Tensor":
        out = cls(data)
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other, self)
        a, b = self, other

        def back(g):
            a._acc(_unbroadcast(g, a.shape))
            b._acc(_unbroadcast(g, b.shape))

        return Tensor._make(a.data + b.data, (a, b), back)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        a = self
        return Tensor._make(-a.data, (a,), lambda g: a._acc(-g))

    def __sub__(self, other) -> "Tensor":
        return self + (-as_tensor(other, self))

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other, self) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other, self)
        a, b = self, other

        def back(g):
            if a.requires_grad:
                a._acc(_unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                b._acc(_unbroadcast(g * a.data, b.shape))

        return Tensor._make(a.data * b.data, (a, b), back)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other, self)
        if other.requires_grad:
            raise NotImplementedError("division by a differentiable tensor")
        return self * (1.0 / other.data).astype(self.data.dtype)

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other, self)
        a, b = self, other

        def back(g):
            if a.requires_grad:
                ga = g @ np.swapaxes(b.data, -1, -2) if b.ndim > 1 else np.multiply.outer(g, b.data)
                a._acc(_unbroadcast(ga, a.shape))
            if b.requires_grad:
                if a.ndim == 1:
                    gb = np.multiply.outer(a.data, g)
                else:
                    gb = np.swapaxes(a.data, -1, -2) @ g
                b._acc(_unbroadcast(gb, b.shape))

        return Tensor._make(a.data @ b.data, (a, b), back)

    # -- reductions and shape ops --------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        a = self

        def back(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a._acc(np.broadcast_to(g, a.shape).copy())

        return Tensor._make(a.data.sum(axis=axis, keepdims=keepdims), (a,), back)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        n = self.data.size if axis is None else np.prod([self.shape[i] for i in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    def reshape(self, *shape) -> "Tensor":
        a = self
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Tensor._make(a.data.reshape(shape), (a,), lambda g: a._acc(g.reshape(a.shape)))

    def transpose(self, *axes) -> "Tensor":
        a = self
        axes = axes or tuple(reversed(range(a.ndim)))
        inv = np.argsort(axes)
        return Tensor._make(a.data.transpose(axes), (a,), lambda g: a._acc(g.transpose(inv)))

    def __getitem__(self, idx) -> "Tensor":
        a = self

        def back(g):
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            a._acc(full)

        return Tensor._make(a.data[idx], (a,), back)

    def gather_rows(self, index: np.ndarray) -> "Tensor":
        """``out[b, ...] = self[b, index[b], ...]`` along axis 1."""
        a = self
        index = np.asarray(index, dtype=np.int64)
        rows = np.arange(a.shape[0])

        def back(g):
            full = np.zeros_like(a.data)
            np.add.at(full, (rows, index), g)
            a._acc(full)

        return Tensor._make(a.data[rows, index], (a,), back)

    # -- elementwise nonlinearities --------------------------------------------------

    def square(self) -> "Tensor":
        a = self
        return Tensor._make(a.data * a.data, (a,), lambda g: a._acc(2.0 * a.data * g))

    def abs(self) -> "Tensor":
        a = self
        # subgradient 0 at 0
        return Tensor._make(np.abs(a.data), (a,), lambda g: a._acc(np.sign(a.data) * g))

    def tanh(self) -> "Tensor":
        a = self
        out = np.tanh(a.data)
        return Tensor._make(out, (a,), lambda g: a._acc((1.0 - out * out) * g))

    def leaky_relu(self, slope: float) -> "Tensor":
        a = self
        if not 0.0 <= slope <= 1.0:
            raise ValueError("LeakyReLU slope must lie in [0, 1]")
        out = np.maximum(a.data, slope * a.data)
        return Tensor._make(out, (a,), lambda g: a._acc(leaky_relu_slope(a.data, slope) * g))

    def affine(self, weight: "Tensor", bias: "Tensor") -> "Tensor":
        """``self @ weight + bias`` for a 2-D input, as one graph node."""
        x, w, b = self, weight, bias

        def back(g):
            if x.requires_grad:
                x._acc(g @ w.data.T)
            if w.requires_grad:
                w._acc(x.data.T @ g)
            if b.requires_grad:
                b._acc(g.sum(axis=0))

        h = _matmul(x.data, w.data)
        h += b.data
        return Tensor._make(h, (x, w, b), back)

    def affine_leaky_relu(self, weight: "Tensor", bias: "Tensor", slope: float) -> "Tensor":
        """LeakyReLU(self @ weight + bias) as one node.

        The output has the sign of the pre-activation (slope > 0), so the
        backward pass recovers the derivative from the output alone.
        """
        if not 0.0 < slope <= 1.0:
            raise ValueError("fused LeakyReLU needs a slope in (0, 1]")
        x, w, b = self, weight, bias
        h = _matmul(x.data, w.data)
        h += b.data
        np.maximum(h, slope * h, out=h)

        def back(g):
            gz = g * leaky_relu_slope(h, slope)
            if x.requires_grad:
                x._acc(gz @ w.data.T)
            if w.requires_grad:
                w._acc(x.data.T @ gz)
            if b.requires_grad:
                b._acc(gz.sum(axis=0))

        return Tensor._make(h, (x, w, b), back)

    # -- backward ------------------------------------------------------------------

    def _acc(self, g: np.ndarray) -> None:
        if not self.requires_grad:
            return
        # never mutate in place: one array may be handed to several parents
        if self.grad is None:
            self.grad = g
        else:
            self.grad = self.grad + g

    def backward(self, grad=None) -> None:
        """Accumulate d(self)/d(node) into ``node.grad`` for every ancestor."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        # intermediate grads are scratch space; leaves keep accumulating
        for node in order:
            if node._parents:
                node.grad = None
        self._acc(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def as_tensor(x, like: Tensor | None = None) -> Tensor:
    """Wrap constants; ``like`` fixes the dtype so float32 graphs stay float32."""
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=None if like is None else like.data.dtype)


def _matmul(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # an inner dimension of 1 is an outer product; BLAS handles it slowly
    return x * w if w.shape[0] == 1 else x @ w


def leaky_relu_slope(x: np.ndarray, slope: float) -> np.ndarray:
    """Derivative of LeakyReLU; the kink at 0 takes the positive-side slope."""
    one, s = x.dtype.type(1.0), x.dtype.type(slope)
    if (one - s) + s != one:
        return np.where(x >= 0.0, one, s)
    # mask arithmetic is far cheaper than a scalar np.where
    m = (x >= 0.0).astype(x.dtype)
    m *= one - s
    m += s
    return m


def zero_grad(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.grad = None
