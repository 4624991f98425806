"""Event feature encoder and cross-attention reweighting of frame features."""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..autograd import (Conv2d, Module, Tensor, gelu, resize_bilinear, scale,
                        sigmoid, softmax)
from ..errors import ShapeError


class EventEncoder(Module):
    """Five 3x3 convs with gelu between; strides 1,2,1,2,1 bring the
    40-channel voxel down to the scale-3 feature shape [4C, H/4, W/4]."""

    def __init__(self, c: int, rng: np.random.Generator, in_ch: int = 40,
                 dtype=np.float32):
        chans = [in_ch, c, 2 * c, 2 * c, 4 * c, 4 * c]
        strides = [1, 2, 1, 2, 1]
        self.conv = [Conv2d(chans[i], chans[i + 1], 3, rng, stride=strides[i],
                            pad=1, dtype=dtype) for i in range(5)]

    def forward(self, voxel: Tensor) -> Tensor:
        x = voxel
        for i, conv in enumerate(self.conv):
            if i:
                x = gelu(x)
            x = conv(x)
        return x

    __call__ = forward


class EventFusion(Module):
    """Reweights frame features by per-pixel channel attention over events.

    At each pixel, the frame feature's channel vector queries the event
    feature's: o = softmax(q * k / sqrt(ch)) * v over the channel axis.
    A 1x1 conv + sigmoid turns o into a gate R, and f' = f * R + f. The
    same o, bilinearly upsampled, feeds per-scale gates for the decoder.
    """

    def __init__(self, ch: int, rng: np.random.Generator, dtype=np.float32):
        self.wq = Conv2d(ch, ch, 1, rng, dtype=dtype)
        self.wk = Conv2d(ch, ch, 1, rng, dtype=dtype)
        self.wv = Conv2d(ch, ch, 1, rng, dtype=dtype)
        self.gate3 = Conv2d(ch, ch, 1, rng, dtype=dtype)
        self.gate2 = Conv2d(ch, ch // 2, 1, rng, dtype=dtype)
        self.gate1 = Conv2d(ch, ch // 4, 1, rng, dtype=dtype)
        self.ch = ch

    def attend(self, f: Tensor, e: Tensor) -> Tensor:
        if f.shape != e.shape:
            raise ShapeError(f"feature shapes differ: {f.shape} vs {e.shape}")
        q = self.wq(f)
        k = self.wk(e)
        v = self.wv(e)
        a = softmax(scale(q * k, self.ch ** -0.5), axis=1)
        return a * v

    def fuse(self, f: Tensor, e: Tensor) -> Tuple[Tensor, Tensor]:
        """Returns (f', o): the reweighted feature and the attention output."""
        o = self.attend(f, e)
        r = sigmoid(self.gate3(o))
        return f * r + f, o

    def reweight(self, d: Tensor, o: Tensor, scale_factor: int) -> Tensor:
        """Apply the upsampled event gate to a decoder feature map."""
        up = resize_bilinear(o, scale_factor)
        gate = self.gate2 if scale_factor == 2 else self.gate1
        r = sigmoid(gate(up))
        if r.shape != d.shape:
            raise ShapeError(f"gate shape {r.shape} does not match {d.shape}")
        return d * r + d

    __call__ = fuse


def event_fuse(fusion: EventFusion, f: Tensor, e: Tensor) -> Tensor:
    """f' = f * R + f with R from per-pixel channel cross-attention."""
    out, _ = fusion.fuse(f, e)
    return out
