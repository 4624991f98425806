"""Global patch matching between a sharp frame and the current frame.

Both scale-3 feature maps are unfolded into overlapping 3x3 patches, rows
are L2-normalized, and the full similarity matrix picks, for every current
patch, the most similar sharp patch (index) plus its cosine similarity
(confidence). The same index list then transplants sharp-frame patches at
every scale: patch size and stride double alongside the feature maps, so
all three scales share one patch count and one index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..autograd import (Tensor, clip, fold, gather_rows, matmul, max_,
                        patch_grid, sqrt, sum_, unfold)
from ..errors import ShapeError

# scale -> (patch, pad, stride); all yield the same grid on maps whose
# sizes are in the 4:2:1 ratio produced by the encoder
SCALE_UNFOLD = {3: (3, 1, 1), 2: (6, 2, 2), 1: (12, 4, 4)}


def _normalize_rows(rows: Tensor) -> Tensor:
    norms = sqrt(sum_(rows * rows, axis=1, keepdims=True))
    return rows / clip(norms, 1e-8, None)


@dataclass
class MatchResult:
    """Argmax index per current patch plus cosine confidence."""

    index: np.ndarray      # [L] int64 rows into the sharp frame's patches
    confidence: Tensor     # [L]
    grid: Tuple[int, int]  # patch grid (rows, cols)

    def confidence_map(self) -> Tensor:
        gh, gw = self.grid
        return self.confidence.reshape((1, 1, gh, gw))


def global_match(sharp3: Tensor, cur3: Tensor) -> MatchResult:
    """Match scale-3 patches of the current frame against a sharp frame."""
    if sharp3.shape != cur3.shape:
        raise ShapeError(f"feature shapes differ: {sharp3.shape} vs {cur3.shape}")
    k, p, r = SCALE_UNFOLD[3]
    q = _normalize_rows(unfold(cur3, k, p, r))
    s = _normalize_rows(unfold(sharp3, k, p, r))
    sim = matmul(q, s.transpose((1, 0)))
    conf = max_(sim, axis=1)
    index = np.argmax(sim.data, axis=1)
    grid = patch_grid(cur3.shape[2], cur3.shape[3], k, p, r)
    return MatchResult(index=index, confidence=conf, grid=grid)


def fold_by_index(sharp: Tensor, index: np.ndarray, scale: int) -> Tensor:
    """Rebuild a map from the sharp frame's patches permuted by `index`.

    `index` must come from global_match at scale 3; the per-scale patch
    parameters keep the patch count identical across scales.
    """
    k, p, r = SCALE_UNFOLD[scale]
    rows = unfold(sharp, k, p, r)
    if index.shape[0] != rows.shape[0]:
        raise ShapeError(
            f"index has {index.shape[0]} entries for {rows.shape[0]} patches")
    _, _, h, w = sharp.shape
    return fold(gather_rows(rows, index), h, w, k, p, r)
