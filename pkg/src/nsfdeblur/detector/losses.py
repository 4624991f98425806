"""Detector training losses: summed binary cross-entropy plus a supervised
contrastive term over cosine similarities to the ground-truth sharp frames."""

from __future__ import annotations

import numpy as np

from ..autograd import Tensor, clip, div, exp, log, mul, scale, sqrt, sum_
from ..errors import ShapeError

_CLAMP = 1e-7
_NORM_FLOOR = 1e-8


def loss_ce(o: Tensor, o_gt: np.ndarray) -> Tensor:
    """Sum of per-frame binary cross-entropies (not the mean)."""
    o_gt = np.asarray(o_gt, dtype=o.data.dtype)
    if o.shape != o_gt.shape:
        raise ShapeError(f"loss_ce shapes differ: {o.shape} vs {o_gt.shape}")
    oc = clip(o, _CLAMP, 1.0 - _CLAMP)
    pos = mul(Tensor(o_gt), log(oc))
    negt = mul(Tensor(1.0 - o_gt), log(1.0 - oc))
    return scale(sum_(pos + negt), -1.0)


def cosine_rows(a: Tensor, b: Tensor) -> Tensor:
    """Row-wise cosine similarity of two [M, D] tensors, norms floored."""
    if a.shape != b.shape or a.ndim != 2:
        raise ShapeError(f"cosine_rows expects matching [M,D], got {a.shape} vs {b.shape}")
    na = clip(sqrt(sum_(mul(a, a), axis=1, keepdims=True)), lo=_NORM_FLOOR)
    nb = clip(sqrt(sum_(mul(b, b), axis=1, keepdims=True)), lo=_NORM_FLOOR)
    return sum_(mul(div(a, na), div(b, nb)), axis=1)


def loss_contrastive(z: Tensor, z_gt: Tensor, labels: np.ndarray) -> Tensor:
    """-log of the sharp frames' share of the exp-similarity mass.

    ``z_gt`` must already be detached (features of the ground-truth sharp
    frames, no gradient). Returns exactly 0 when the segment has no sharp
    frame (the term is undefined there) and when it has no blurry frame.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != z.shape[0]:
        raise ShapeError(f"labels length {labels.shape[0]} != features {z.shape[0]}")
    sharp = (labels == 1)
    if not sharp.any():
        return Tensor(np.zeros((), dtype=z.data.dtype))
    e = exp(cosine_rows(z, z_gt))
    num = sum_(mul(e, Tensor(sharp.astype(z.data.dtype))))
    den = sum_(e)
    return log(den) - log(num)


def detector_loss(o: Tensor, o_gt: np.ndarray, z: Tensor, z_gt: Tensor,
                  lam: float = 10.0) -> Tensor:
    """Cross-entropy plus lam times the contrastive term."""
    total = loss_ce(o, o_gt)
    if lam != 0.0:
        total = total + scale(loss_contrastive(z, z_gt, o_gt), lam)
    return total
