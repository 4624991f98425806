"""Event-camera simulation from the high-rate sharp stream.

Per pixel, a reference log-intensity is kept; whenever the (linearly
interpolated) log-intensity crosses the reference by the contrast
threshold, an event fires and the reference moves one threshold step. This
keeps |log I - ref| < threshold after every frame, the standard idealized
emission model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError
from .synth import SharpVideo

_LOG_FLOOR = 1e-3


@dataclass
class EventStream:
    """Time-ordered events plus the exposure window of each output frame."""

    t_us: np.ndarray     # [N] int64, nondecreasing
    x: np.ndarray        # [N] int32 column
    y: np.ndarray        # [N] int32 row
    p: np.ndarray        # [N] int8, +1 / -1
    height: int
    width: int
    windows_us: Optional[np.ndarray] = None   # [M, 2] int64 or None

    def __len__(self) -> int:
        return self.t_us.shape[0]


def _log_intensity(frames: np.ndarray) -> np.ndarray:
    lum = frames.astype(np.float64).mean(axis=3)
    return np.log(np.maximum(lum, _LOG_FLOOR))


def synth_events(video: SharpVideo, contrast_threshold: float = 0.15,
                 windows: Optional[np.ndarray] = None) -> EventStream:
    """Emit threshold-crossing events over the whole video timeline."""
    if contrast_threshold <= 0:
        raise ConfigError(f"contrast threshold must be positive, got {contrast_threshold}")
    h, w = video.height, video.width
    logi = _log_intensity(video.frames).reshape(video.n_frames, h * w)
    ts = video.timestamps_us().astype(np.float64)

    ref = logi[0].copy()
    all_t, all_pix, all_p = [], [], []
    for k in range(video.n_frames - 1):
        lk, l1 = logi[k], logi[k + 1]
        d = l1 - ref
        count = np.floor(np.abs(d) / contrast_threshold).astype(np.int64)
        hit = np.nonzero(count)[0]
        if hit.size == 0:
            continue
        c = count[hit]
        sgn = np.sign(d[hit])
        pix = np.repeat(hit, c)
        sgn_r = np.repeat(sgn, c)
        # crossing ordinal 1..c per pixel
        offs = np.concatenate(([0], np.cumsum(c)[:-1]))
        m = np.arange(int(c.sum())) - np.repeat(offs, c) + 1
        level = ref[pix] + sgn_r * m * contrast_threshold
        rise = l1[pix] - lk[pix]
        frac = np.where(np.abs(rise) > 1e-12, (level - lk[pix]) / np.where(rise == 0, 1.0, rise), 1.0)
        frac = np.clip(frac, 0.0, 1.0)
        all_t.append(np.round(ts[k] + frac * (ts[k + 1] - ts[k])).astype(np.int64))
        all_pix.append(pix)
        all_p.append(sgn_r.astype(np.int8))
        ref[hit] += sgn * c * contrast_threshold

    if all_t:
        t = np.concatenate(all_t)
        pix = np.concatenate(all_pix)
        p = np.concatenate(all_p)
        order = np.argsort(t, kind="stable")
        t, pix, p = t[order], pix[order], p[order]
    else:
        t = np.zeros(0, dtype=np.int64)
        pix = np.zeros(0, dtype=np.int64)
        p = np.zeros(0, dtype=np.int8)

    return EventStream(t_us=t, x=(pix % w).astype(np.int32), y=(pix // w).astype(np.int32),
                       p=p, height=h, width=w,
                       windows_us=None if windows is None else np.asarray(windows, dtype=np.int64))
