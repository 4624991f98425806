"""Nearest-sharp-frame selection and five-frame input assembly.

For frame i the network consumes {G-, B_{i-1}, B_i, B_{i+1}, G+} where G-
and G+ are the nearest frames labeled sharp within ``n`` steps on each
side; a side with no sharp frame in range falls back to i-+2 (clamped),
and immediate neighbors clamp at the sequence ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import ShapeError


@dataclass
class Quintuple:
    indices: Tuple[int, int, int, int, int]   # (g_minus, i-1, i, i+1, g_plus)
    frames: np.ndarray                         # [5, H, W, 3] float32
    used_fallback: Tuple[bool, bool]           # (minus side, plus side)

    @property
    def center(self) -> int:
        return self.indices[2]


def select_sharp_neighbors(labels: Sequence[int], i: int, n: int = 7
                           ) -> Tuple[int, int, Tuple[bool, bool]]:
    """Nearest sharp index within n steps per direction, i-+2 fallback.

    The current frame's own label never matters; each side searches
    independently over offsets 1..n.
    """
    labels = np.asarray(labels)
    m = len(labels)
    if not 0 <= i < m:
        raise ShapeError(f"frame index {i} outside sequence of length {m}")

    g_minus, fb_minus = -1, True
    for off in range(1, n + 1):
        j = i - off
        if j < 0:
            break
        if labels[j] == 1:
            g_minus, fb_minus = j, False
            break
    if fb_minus:
        g_minus = min(max(i - 2, 0), m - 1)

    g_plus, fb_plus = -1, True
    for off in range(1, n + 1):
        j = i + off
        if j >= m:
            break
        if labels[j] == 1:
            g_plus, fb_plus = j, False
            break
    if fb_plus:
        g_plus = min(max(i + 2, 0), m - 1)

    return g_minus, g_plus, (fb_minus, fb_plus)


def build_quintuples(frames: np.ndarray, labels: Sequence[int], n: int = 7
                     ) -> list[Quintuple]:
    """One Quintuple per frame, in order."""
    frames = np.asarray(frames)
    m = frames.shape[0]
    if m < 1:
        raise ShapeError("build_quintuples needs at least one frame")
    if len(labels) != m:
        raise ShapeError(f"labels length {len(labels)} != frames {m}")

    out = []
    for i in range(m):
        g_minus, g_plus, fb = select_sharp_neighbors(labels, i, n)
        idx = (g_minus, max(i - 1, 0), i, min(i + 1, m - 1), g_plus)
        out.append(Quintuple(indices=idx, frames=frames[list(idx)].copy(),
                             used_fallback=fb))
    return out
