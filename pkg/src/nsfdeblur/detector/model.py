"""Blur-aware frame classifier: per-frame CNN features, a bidirectional
LSTM over the sequence, and a sigmoid head giving sharpness scores."""

from __future__ import annotations

from typing import Sequence, Tuple, Union

import numpy as np

from ..autograd import (Conv2d, Linear, Module, Tensor, check_finite, concat,
                        gelu, matmul, mean, mul, no_grad, sigmoid, tanh)
from ..autograd.init import uniform_fan
from ..errors import ConfigError, ShapeError
from ..imgutil import to_chw_tensor

ImageLike = Union[np.ndarray, Tensor]


class FeatureCnn(Module):
    """Four stride-2 conv+gelu stages, global average pooled to a D-vector."""

    def __init__(self, d: int, rng: np.random.Generator, dtype=np.float32):
        if d % 8:
            raise ConfigError(f"feature dim must be a multiple of 8, got {d}")
        chans = [3, d // 8, d // 4, d // 2, d]
        self.conv0 = Conv2d(chans[0], chans[1], 3, rng, stride=2, pad=1, dtype=dtype)
        self.conv1 = Conv2d(chans[1], chans[2], 3, rng, stride=2, pad=1, dtype=dtype)
        self.conv2 = Conv2d(chans[2], chans[3], 3, rng, stride=2, pad=1, dtype=dtype)
        self.conv3 = Conv2d(chans[3], chans[4], 3, rng, stride=2, pad=1, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        for conv in (self.conv0, self.conv1, self.conv2, self.conv3):
            x = gelu(conv(x))
        return mean(x, axis=(2, 3)).reshape((x.shape[1],))

    __call__ = forward


class LstmCell(Module):
    def __init__(self, din: int, dh: int, rng: np.random.Generator, dtype=np.float32):
        # gate order i, f, g, o; the usual uniform(1/sqrt(dh)) init
        self.wx = Tensor(uniform_fan((din, 4 * dh), dh, rng, dtype), requires_grad=True)
        self.wh = Tensor(uniform_fan((dh, 4 * dh), dh, rng, dtype), requires_grad=True)
        self.b = Tensor(np.zeros(4 * dh, dtype=dtype), requires_grad=True)
        self.dh = dh

    def step(self, x: Tensor, h: Tensor, c: Tensor) -> Tuple[Tensor, Tensor]:
        dh = self.dh
        g = matmul(x, self.wx) + matmul(h, self.wh) + self.b
        i = sigmoid(g[:, 0 * dh:1 * dh])
        f = sigmoid(g[:, 1 * dh:2 * dh])
        u = tanh(g[:, 2 * dh:3 * dh])
        o = sigmoid(g[:, 3 * dh:4 * dh])
        c2 = mul(f, c) + mul(i, u)
        return mul(o, tanh(c2)), c2


class BiLstm(Module):
    """Forward and backward passes over the sequence, outputs concatenated."""

    def __init__(self, din: int, dh: int, rng: np.random.Generator, dtype=np.float32):
        self.fwd = LstmCell(din, dh, rng, dtype)
        self.bwd = LstmCell(din, dh, rng, dtype)
        self.dh = dh
        self.dtype = dtype

    def forward(self, xs: Tensor) -> Tensor:
        m = xs.shape[0]
        zero = Tensor(np.zeros((1, self.dh), dtype=self.dtype))
        hf, cf = zero, zero
        fwd_states = []
        for t in range(m):
            hf, cf = self.fwd.step(xs[t:t + 1], hf, cf)
            fwd_states.append(hf)
        hb, cb = zero, zero
        bwd_states: list = [None] * m
        for t in range(m - 1, -1, -1):
            hb, cb = self.bwd.step(xs[t:t + 1], hb, cb)
            bwd_states[t] = hb
        rows = [concat([fwd_states[t], bwd_states[t]], axis=1) for t in range(m)]
        return concat(rows, axis=0)

    __call__ = forward


class DetectorModel(Module):
    """feat_cnn -> BiLSTM -> affine -> sigmoid sharpness score per frame."""

    def __init__(self, d: int = 64, rng: np.random.Generator | None = None,
                 dtype=np.float32):
        rng = np.random.default_rng(0) if rng is None else rng
        self.feat = FeatureCnn(d, rng, dtype)
        self.bilstm = BiLstm(d, d // 2, rng, dtype)
        self.head = Linear(d, 1, rng, dtype)
        self.d = d
        self.dtype = dtype

    def extract_features(self, frame: ImageLike) -> Tensor:
        z = self.feat(to_chw_tensor(frame, self.dtype))
        return check_finite(z, "extract_features")

    def detect_probs(self, frames: Sequence[ImageLike]) -> Tuple[Tensor, Tensor]:
        """Sharpness probabilities o [M] and features z [M, D] for a sequence.

        The BiLSTM always runs over the full given sequence; callers choose
        segment length (5 during training, the whole video at inference).
        """
        if len(frames) < 1:
            raise ShapeError("detect_probs needs at least one frame")
        zs = [self.extract_features(f).reshape((1, self.d)) for f in frames]
        z = concat(zs, axis=0)
        hidden = self.bilstm(z)
        o = sigmoid(self.head(hidden).reshape((len(frames),)))
        return o, z


def classify(o: Union[Tensor, np.ndarray], eps: float = 0.5) -> np.ndarray:
    """Threshold scores: label 0 (blurry) iff o < eps, else 1 (sharp)."""
    arr = o.data if isinstance(o, Tensor) else np.asarray(o)
    return (arr >= eps).astype(np.int64)


def detect_labels(model: DetectorModel, frames: Sequence[ImageLike],
                  eps: float = 0.5) -> Tuple[np.ndarray, np.ndarray]:
    """Inference helper: scores and labels for a whole video, no graph kept."""
    with no_grad():
        o, _ = model.detect_probs(frames)
    return o.data.copy(), classify(o, eps)
