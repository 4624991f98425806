"""Three-scale convolutional encoder: C at full resolution, 2C at half, 4C
at quarter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autograd import Conv2d, Module, ResBlock, Tensor, gelu
from ..errors import ShapeError


@dataclass
class ScaleFeatures:
    s1: Tensor   # [1, C, H, W]
    s2: Tensor   # [1, 2C, H/2, W/2]
    s3: Tensor   # [1, 4C, H/4, W/4]

    def at(self, scale: int) -> Tensor:
        return {1: self.s1, 2: self.s2, 3: self.s3}[scale]


class EncoderStage(Module):
    def __init__(self, cin: int, cout: int, stride: int, n_res: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.conv0 = Conv2d(cin, cout, 3, rng, stride=stride, pad=1, dtype=dtype)
        self.res = [ResBlock(cout, rng, dtype) for _ in range(n_res)]

    def forward(self, x: Tensor) -> Tensor:
        x = gelu(self.conv0(x))
        for block in self.res:
            x = block(x)
        return x

    __call__ = forward


class Encoder(Module):
    def __init__(self, c: int, n_res: int, rng: np.random.Generator, dtype=np.float32):
        self.s1 = EncoderStage(3, c, 1, n_res, rng, dtype)
        self.s2 = EncoderStage(c, 2 * c, 2, n_res, rng, dtype)
        self.s3 = EncoderStage(2 * c, 4 * c, 2, n_res, rng, dtype)

    def forward(self, x: Tensor) -> ScaleFeatures:
        if x.ndim != 4 or x.shape[0] != 1 or x.shape[1] != 3:
            raise ShapeError(f"encoder expects [1,3,H,W], got {x.shape}")
        if x.shape[2] % 4 or x.shape[3] % 4:
            raise ShapeError(f"frame size must be a multiple of 4, got {x.shape[2]}x{x.shape[3]}")
        f1 = self.s1(x)
        f2 = self.s2(f1)
        f3 = self.s3(f2)
        return ScaleFeatures(s1=f1, s2=f2, s3=f3)

    __call__ = forward
