"""Reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and remembers how it was produced. Every op
builds the result eagerly and, when gradients are enabled and some input
requires them, attaches a closure that maps the output gradient to input
gradients. ``Tensor.backward`` topologically sorts the recorded graph and
accumulates gradients into every requires-grad leaf.

Storage convention: float32 by default, float64 allowed everywhere (the
gradient checker runs whole models in float64). Reductions accumulate in
float64 regardless of storage dtype. Integer arrays never become Tensors;
they ride along as plain numpy index constants.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

from ..errors import NumericError, ShapeError

_FLOAT_DTYPES = (np.float32, np.float64)

_grad_enabled = True


def grad_enabled() -> bool:
    return _grad_enabled


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (forward-only evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_float_array(data, dtype=None) -> np.ndarray:
    arr = np.asarray(data)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if arr.dtype in _FLOAT_DTYPES:
        return arr
    return arr.astype(np.float32)


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{op} produced non-finite values")


class Tensor:
    """An ndarray plus the graph edges needed for reverse-mode autodiff."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = _as_float_array(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple[Tensor, ...] = ()
        self._backward_fn: Optional[Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]] = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __float__(self) -> float:
        return self.item()

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{flag})"

    def detach(self) -> "Tensor":
        """A new leaf sharing this tensor's data, cut off from the graph."""
        return Tensor(self.data, requires_grad=False)

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy(), requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    # -- graph ---------------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from this scalar, accumulating into leaf ``grad``.

        Repeated calls keep adding into ``grad``; callers reset leaves with
        ``zero_grad`` between steps.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward() requires a scalar loss, got shape {self.shape}")

        order: list[Tensor] = []
        seen = set()
        stack: list[Tuple[Tensor, bool]] = [(self, False)]
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

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward_fn is None:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward_fn(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # -- operator sugar --------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return slice_(self, key)

    @property
    def T(self) -> "Tensor":
        if self.ndim != 2:
            raise ShapeError("T is defined for 2-d tensors only")
        return transpose(self, (1, 0))

    def reshape(self, shape) -> "Tensor":
        return reshape(self, shape)

    def transpose(self, axes) -> "Tensor":
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False) -> "Tensor":
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False) -> "Tensor":
        return mean(self, axis=axis, keepdims=keepdims)

    def max(self, axis=None) -> "Tensor":
        return max_(self, axis=axis)

    def scale(self, s: float) -> "Tensor":
        return scale(self, s)

    def astype(self, dtype) -> "Tensor":
        return astype(self, dtype)


TensorLike = Union[Tensor, float, int, np.ndarray]


def _wrap(x: TensorLike, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype if dtype is not None else np.float32))


def _make(data: np.ndarray, parents: Tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward_fn = None
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcasted gradient back to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# -- pointwise ops -------------------------------------------------------


def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(data, (a, b), backward)


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(data, (a, b), backward)


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data * b.data
    ad, bd = a.data, b.data

    def backward(g):
        return _unbroadcast(g * bd, a.shape), _unbroadcast(g * ad, b.shape)

    return _make(data, (a, b), backward)


def div(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data / b.data
    _check_finite(data, "div")
    ad, bd = a.data, b.data

    def backward(g):
        return _unbroadcast(g / bd, a.shape), _unbroadcast(-g * ad / (bd * bd), b.shape)

    return _make(data, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    def backward(g):
        return (-g,)

    return _make(-a.data, (a,), backward)


def scale(a: Tensor, s: float) -> Tensor:
    """Multiply by a python scalar (no graph node for the constant)."""
    s = float(s)

    def backward(g):
        return (g * s,)

    return _make(a.data * s, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # split by sign so exp never overflows
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                   np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = out.astype(x.dtype, copy=False)

    def backward(g):
        return (g * out * (1.0 - out),)

    return _make(out, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def backward(g):
        return (g * (1.0 - out * out),)

    return _make(out, (a,), backward)


_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(a: Tensor) -> Tensor:
    """Exact gaussian error linear unit, 0.5 * x * (1 + erf(x / sqrt(2)))."""
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    out = (x * cdf).astype(x.dtype, copy=False)

    def backward(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return ((g * (cdf + x * pdf)).astype(g.dtype, copy=False),)

    return _make(out, (a,), backward)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    _check_finite(out, "exp")

    def backward(g):
        return (g * out,)

    return _make(out, (a,), backward)


def log(a: Tensor) -> Tensor:
    out = np.log(a.data)
    _check_finite(out, "log")
    ad = a.data

    def backward(g):
        return (g / ad,)

    return _make(out, (a,), backward)


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)
    _check_finite(out, "sqrt")

    def backward(g):
        return (g * (0.5 / out),)

    return _make(out, (a,), backward)


def abs_(a: Tensor) -> Tensor:
    ad = a.data

    def backward(g):
        return (g * np.sign(ad),)

    return _make(np.abs(ad), (a,), backward)


def clip(a: Tensor, lo: Optional[float] = None, hi: Optional[float] = None) -> Tensor:
    ad = a.data
    out = np.clip(ad, lo, hi)

    def backward(g):
        mask = np.ones_like(ad, dtype=bool)
        if lo is not None:
            mask &= ad >= lo
        if hi is not None:
            mask &= ad <= hi
        return (g * mask,)

    return _make(out, (a,), backward)


def astype(a: Tensor, dtype) -> Tensor:
    dtype = np.dtype(dtype)
    if dtype.type not in _FLOAT_DTYPES:
        raise ShapeError(f"astype supports float32/float64, got {dtype}")
    src = a.data.dtype

    def backward(g):
        return (g.astype(src, copy=False),)

    return _make(a.data.astype(dtype), (a,), backward)


# -- matmul / reductions ---------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul expects tensors with at least 2 dimensions")
    data = np.matmul(a.data, b.data)
    ad, bd = a.data, b.data

    def backward(g):
        ga = np.matmul(g, np.swapaxes(bd, -1, -2))
        gb = np.matmul(np.swapaxes(ad, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(data, (a, b), backward)


def _normalize_axis(axis, ndim):
    if axis is None:
        return None
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axis = _normalize_axis(axis, a.ndim)
    # accumulate in float64, store back in the input dtype
    data = a.data.sum(axis=axis, keepdims=keepdims, dtype=np.float64).astype(a.dtype)
    data = np.asarray(data)
    in_shape = a.shape

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, in_shape).astype(g.dtype, copy=False).copy(),)
        gk = g
        if not keepdims:
            for ax in sorted(axis):
                gk = np.expand_dims(gk, ax)
        return (np.broadcast_to(gk, in_shape).copy(),)

    return _make(data, (a,), backward)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axis_n = _normalize_axis(axis, a.ndim)
    if axis_n is None:
        count = a.size
    else:
        count = int(np.prod([a.shape[ax] for ax in axis_n]))
    return scale(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def max_(a: Tensor, axis=None) -> Tensor:
    """Maximum along an axis; ties send the gradient to the lowest index."""
    ad = a.data
    if axis is None:
        data = np.asarray(ad.max())
        flat_idx = int(np.argmax(ad))

        def backward(g):
            ga = np.zeros_like(ad)
            ga.reshape(-1)[flat_idx] = g
            return (ga,)

        return _make(data, (a,), backward)

    axis = axis % a.ndim
    data = ad.max(axis=axis)
    idx = np.argmax(ad, axis=axis)

    def backward(g):
        ga = np.zeros_like(ad)
        np.put_along_axis(ga, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis)
        return (ga,)

    return _make(data, (a,), backward)


# -- shape ops -------------------------------------------------------------


def reshape(a: Tensor, shape) -> Tensor:
    in_shape = a.shape
    data = a.data.reshape(shape)

    def backward(g):
        return (g.reshape(in_shape),)

    return _make(data, (a,), backward)


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    data = a.data.transpose(axes)

    def backward(g):
        return (g.transpose(inv),)

    return _make(data, (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(data, tensors, backward)


def concat_channels(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate feature maps [B, C, H, W] along the channel axis."""
    return concat(tensors, axis=1)


def slice_(a: Tensor, key) -> Tensor:
    data = a.data[key]
    if np.isscalar(data) or data.ndim == 0:
        data = np.asarray(data)
    else:
        data = data.copy()
    in_shape = a.shape
    in_dtype = a.data.dtype

    def backward(g):
        ga = np.zeros(in_shape, dtype=in_dtype)
        ga[key] = g
        return (ga,)

    return _make(data, (a,), backward)


def pad2d(a: Tensor, top: int, bottom: int, left: int, right: int) -> Tensor:
    """Zero-pad the last two axes by the given per-side amounts."""
    if top == bottom == left == right == 0:
        return a
    width = [(0, 0)] * (a.ndim - 2) + [(top, bottom), (left, right)]
    data = np.pad(a.data, width)

    def backward(g):
        sl = (Ellipsis, slice(top, g.shape[-2] - bottom), slice(left, g.shape[-1] - right))
        return (g[sl].copy(),)

    return _make(data, (a,), backward)


def roll(a: Tensor, shifts, axes) -> Tensor:
    data = np.roll(a.data, shifts, axis=axes)

    def backward(g):
        if isinstance(shifts, tuple):
            inv = tuple(-s for s in shifts)
        else:
            inv = -shifts
        return (np.roll(g, inv, axis=axes),)

    return _make(data, (a,), backward)


def gather_rows(a: Tensor, index: np.ndarray) -> Tensor:
    """Select rows of a 2-d tensor by an integer index vector.

    Backward scatter-adds, so repeated indices accumulate correctly.
    """
    if a.ndim != 2:
        raise ShapeError(f"gather_rows expects a 2-d tensor, got shape {a.shape}")
    index = np.asarray(index)
    if index.ndim != 1 or not np.issubdtype(index.dtype, np.integer):
        raise ShapeError("gather_rows index must be a 1-d integer array")
    data = a.data[index].copy()
    in_shape = a.shape
    in_dtype = a.data.dtype

    def backward(g):
        ga = np.zeros(in_shape, dtype=in_dtype)
        np.add.at(ga, index, g)
        return (ga,)

    return _make(data, (a,), backward)


# -- composite primitives ---------------------------------------------------


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    x = a.data
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)
    out = out.astype(x.dtype, copy=False)

    def backward(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return ((g - dot) * out,)

    return _make(out, (a,), backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then apply the learned affine map."""
    if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
        raise ShapeError("layer_norm affine parameters must match the last axis")
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True, dtype=np.float64)
    var = np.square(xd.astype(np.float64) - mu).mean(axis=-1, keepdims=True)
    inv = (1.0 / np.sqrt(var + eps)).astype(xd.dtype)
    xhat = ((xd - mu) * inv).astype(xd.dtype)
    out = gamma.data * xhat + beta.data

    def backward(g):
        dxhat = g * gamma.data
        dx = inv * (dxhat
                    - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        reduce_axes = tuple(range(g.ndim - 1))
        dgamma = (g * xhat).sum(axis=reduce_axes, dtype=np.float64).astype(gamma.dtype)
        dbeta = g.sum(axis=reduce_axes, dtype=np.float64).astype(beta.dtype)
        return dx, dgamma, dbeta

    return _make(out, (x, gamma, beta), backward)


def check_finite(t: Tensor, what: str = "tensor") -> Tensor:
    _check_finite(t.data, what)
    return t
