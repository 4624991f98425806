"""Event stream to 40-channel voxel tensor (20 temporal bins x 2 polarities)."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from ..datagen.events import EventStream
from ..errors import DataError

N_BINS = 20


def voxelize(events: EventStream, window_us: Tuple[int, int],
             h: int, w: int) -> np.ndarray:
    """Count events into a [40, h, w] float32 tensor.

    Channels 0-19 hold positive-polarity counts by temporal bin, 20-39
    negative. Bin = floor(20 * (t - t0) / (t1 - t0)), clamped to 19 so the
    closing timestamp lands in the last bin. Events outside [t0, t1] are
    ignored; out-of-bounds coordinates raise DataError naming the record.
    """
    t0, t1 = int(window_us[0]), int(window_us[1])
    if t1 <= t0:
        raise DataError(f"empty event window [{t0}, {t1}]")
    vox = np.zeros((2 * N_BINS, h, w), dtype=np.float32)
    if events.t_us.size == 0:
        return vox

    keep = (events.t_us >= t0) & (events.t_us <= t1)
    t = events.t_us[keep]
    x = events.x[keep]
    y = events.y[keep]
    p = events.p[keep]

    bad = np.nonzero((x < 0) | (x >= w) | (y < 0) | (y >= h))[0]
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"event out of bounds: t_us={int(t[i])} x={int(x[i])} y={int(y[i])} "
            f"for a {h}x{w} frame")

    bins = ((t - t0) * N_BINS) // (t1 - t0)
    bins = np.minimum(bins, N_BINS - 1).astype(np.int64)
    plane = np.where(p > 0, bins, bins + N_BINS)
    np.add.at(vox, (plane, y, x), 1.0)
    return vox
