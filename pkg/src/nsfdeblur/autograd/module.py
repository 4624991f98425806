"""Parameter containers and the standard layers built on the tensor ops.

Module walks its attributes (insertion order) to enumerate parameters with
dotted names: a child module contributes ``attr.param``, a list of modules
contributes ``attr0.param``, ``attr1.param``, ... These names are the
checkpoint keys, so attribute naming is part of the file format.
"""

from __future__ import annotations

from typing import Iterator, Mapping, Optional, Tuple

import numpy as np

from ..errors import DataError, ShapeError
from . import tensor as T
from .conv import conv2d, conv2d_transposed
from .init import trunc_normal, uniform_fan
from .tensor import Tensor


class Module:
    """Base class: parameter discovery, state IO, grad reset."""

    def named_params(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor):
                if value.requires_grad:
                    yield name, value
            elif isinstance(value, Module):
                yield from value.named_params(f"{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_params(f"{name}{i}.")
                    elif isinstance(item, Tensor) and item.requires_grad:
                        yield f"{name}{i}", item

    def params(self) -> list[Tensor]:
        return [p for _, p in self.named_params()]

    def zero_grad(self) -> None:
        for p in self.params():
            p.grad = None

    def param_count(self) -> int:
        return sum(p.size for p in self.params())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_params()}

    def load_state(self, state: Mapping[str, np.ndarray]) -> None:
        """Copy arrays into parameters by name; names and shapes must match."""
        own = dict(self.named_params())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise DataError(f"checkpoint mismatch: missing {missing[:4]}, unexpected {extra[:4]}")
        for name, p in own.items():
            arr = np.asarray(state[name])
            if tuple(arr.shape) != p.shape:
                raise DataError(f"checkpoint entry {name} has shape {arr.shape}, expected {p.shape}")
            p.data = arr.astype(p.data.dtype, copy=True)


class Linear(Module):
    """Affine map on the last axis: x [..., din] -> [..., dout]."""

    def __init__(self, din: int, dout: int, rng: np.random.Generator,
                 dtype=np.float32, bias: bool = True):
        self.w = Tensor(trunc_normal((din, dout), 0.02, rng, dtype), requires_grad=True)
        self.b = Tensor(np.zeros(dout, dtype=dtype), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = T.matmul(x, self.w)
        return out if self.b is None else out + self.b

    __call__ = forward


class Conv2d(Module):
    def __init__(self, cin: int, cout: int, k: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0, dtype=np.float32, bias: bool = True):
        fan = cin * k * k
        self.w = Tensor(uniform_fan((cout, cin, k, k), fan, rng, dtype), requires_grad=True)
        self.b = Tensor(uniform_fan((cout,), fan, rng, dtype), requires_grad=True) if bias else None
        self.stride = stride
        self.pad = pad

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.w, self.b, stride=self.stride, pad=self.pad)

    __call__ = forward


class ConvTranspose2d(Module):
    def __init__(self, cin: int, cout: int, k: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0, dtype=np.float32, bias: bool = True):
        fan = cin * k * k
        self.w = Tensor(uniform_fan((cin, cout, k, k), fan, rng, dtype), requires_grad=True)
        self.b = Tensor(uniform_fan((cout,), fan, rng, dtype), requires_grad=True) if bias else None
        self.stride = stride
        self.pad = pad

    def forward(self, x: Tensor) -> Tensor:
        return conv2d_transposed(x, self.w, self.b, stride=self.stride, pad=self.pad)

    __call__ = forward


class LayerNorm(Module):
    def __init__(self, dim: int, dtype=np.float32, eps: float = 1e-5):
        self.g = Tensor(np.ones(dim, dtype=dtype), requires_grad=True)
        self.b = Tensor(np.zeros(dim, dtype=dtype), requires_grad=True)
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.g, self.b, eps=self.eps)

    __call__ = forward


class ResBlock(Module):
    """conv3x3 -> gelu -> conv3x3, plus the input."""

    def __init__(self, ch: int, rng: np.random.Generator, dtype=np.float32):
        self.conv0 = Conv2d(ch, ch, 3, rng, pad=1, dtype=dtype)
        self.conv1 = Conv2d(ch, ch, 3, rng, pad=1, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return x + self.conv1(T.gelu(self.conv0(x)))

    __call__ = forward


def zero_module(m: Module) -> Module:
    """Set every parameter of a module to zero in place (weight surgery)."""
    for _, p in m.named_params():
        p.data = np.zeros_like(p.data)
    return m
