"""Aggregation of transplanted sharp features, and the upsampling decoder."""

from __future__ import annotations

import numpy as np

from ..autograd import (Conv2d, ConvTranspose2d, Module, ResBlock, Tensor,
                        concat_channels)


class DirectionConv(Module):
    """Fusion conv for one temporal direction: [transplant, current] -> blend."""

    def __init__(self, ch: int, rng: np.random.Generator, dtype=np.float32):
        self.conv = Conv2d(2 * ch, ch, 3, rng, pad=1, dtype=dtype)

    def forward(self, g: Tensor, x: Tensor) -> Tensor:
        return self.conv(concat_channels([g, x]))

    __call__ = forward


class ScaleAggregator(Module):
    """Blend sharp-frame transplants into the current features at one scale.

    Each direction's blend is gated by that direction's matching confidence
    before the residual sum:

        d = conv_plus([g_plus, x]) * m_plus + conv_minus([g_minus, x]) * m_minus + x

    Zero confidence maps make this the identity on x.
    """

    def __init__(self, ch: int, rng: np.random.Generator, dtype=np.float32):
        self.plus = DirectionConv(ch, rng, dtype)
        self.minus = DirectionConv(ch, rng, dtype)

    def forward(self, x: Tensor, g_plus: Tensor, g_minus: Tensor,
                m_plus: Tensor, m_minus: Tensor) -> Tensor:
        return self.plus(g_plus, x) * m_plus + self.minus(g_minus, x) * m_minus + x

    __call__ = forward


class DecoderStage(Module):
    """Residual blocks followed by a 2x transposed-conv upsample (ch -> ch/2)."""

    def __init__(self, ch: int, n_res: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.res = [ResBlock(ch, rng, dtype) for _ in range(n_res)]
        self.up = ConvTranspose2d(ch, ch // 2, 2, rng, stride=2, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        for block in self.res:
            x = block(x)
        return self.up(x)

    __call__ = forward


class OutputHead(Module):
    """Residual blocks then a 3x3 projection to RGB."""

    def __init__(self, ch: int, n_res: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.res = [ResBlock(ch, rng, dtype) for _ in range(n_res)]
        self.out = Conv2d(ch, 3, 3, rng, pad=1, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        for block in self.res:
            x = block(x)
        return self.out(x)

    __call__ = forward
