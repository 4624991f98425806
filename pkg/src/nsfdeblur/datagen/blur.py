"""Exposure-averaging blur synthesis and sequence labeling.

A blurry frame is the arithmetic mean of n_avg consecutive sharp frames;
the frame is labeled sharp (1) when n_avg falls below the profile's
threshold. Ground truth for every output frame is the center sharp frame
of its averaging window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError
from .synth import SharpVideo


@dataclass(frozen=True)
class BlurProfile:
    name: str
    avg_min: int
    avg_max: int
    sharp_threshold: int


GOPRO_LIKE = BlurProfile("gopro_like", 1, 15, 5)
REDS_LIKE = BlurProfile("reds_like", 3, 39, 17)

_PROFILES = {p.name: p for p in (GOPRO_LIKE, REDS_LIKE)}


def get_profile(name: str) -> BlurProfile:
    try:
        return _PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown blur profile {name!r}; known: {sorted(_PROFILES)}") from None


@dataclass
class LabeledSequence:
    """Output frames plus their sharpness labels and ground truth.

    labels[i] is 1 for sharp, 0 for blurry; gt_frames may be None for
    sequences read from a dataset without a gt/ directory.
    """

    frames: np.ndarray                 # [M, H, W, 3] float32
    gt_frames: Optional[np.ndarray]    # [M, H, W, 3] float32 or None
    labels: np.ndarray                 # [M] int64, 1 = sharp
    n_avg: np.ndarray                  # [M] int64
    windows_us: np.ndarray             # [M, 2] int64 exposure intervals
    profile_name: str
    seed: int
    fps_virtual: float

    def __post_init__(self):
        m = self.frames.shape[0]
        if self.gt_frames is not None and self.gt_frames.shape[0] != m:
            raise ConfigError("gt_frames length differs from frames")
        if len(self.labels) != m or len(self.n_avg) != m or self.windows_us.shape[0] != m:
            raise ConfigError("sequence field lengths differ")

    def __len__(self) -> int:
        return self.frames.shape[0]


def blur_average(video: SharpVideo, center: int, n_avg: int) -> np.ndarray:
    """Mean of the window [center - n//2, center + ceil(n/2) - 1], clipped."""
    if not 0 <= center < video.n_frames:
        raise IndexError(f"center {center} outside video of {video.n_frames} frames")
    if n_avg < 1:
        raise ConfigError(f"n_avg must be >= 1, got {n_avg}")
    lo = max(center - n_avg // 2, 0)
    hi = min(center + (n_avg + 1) // 2, video.n_frames)
    return video.frames[lo:hi].mean(axis=0, dtype=np.float64).astype(np.float32)


def _draw_labels(out_len: int, rng: np.random.Generator) -> np.ndarray:
    """Sharp/blurry assignment with realized sharp fraction 50% +- 5%.

    Per-frame uniform draws over the full averaging range almost never land
    near 50% sharp (the sharp sub-range is the small side of the interval),
    so the class is drawn first and n_avg is drawn inside the class later.
    """
    half_band = max(0.05 * out_len, 0.5)
    for _ in range(10000):
        sharp = (rng.random(out_len) < 0.5).astype(np.int64)
        if abs(float(sharp.sum()) - out_len / 2.0) <= half_band:
            return sharp
    raise ConfigError(f"could not realize a 50%+-5% sharp split for length {out_len}")


def make_labeled_sequence(video: SharpVideo, profile: BlurProfile, out_len: int,
                          seed: int, stride: Optional[int] = None) -> LabeledSequence:
    """Blur the video into out_len labeled frames under the profile.

    Window centers advance by ``stride`` sharp frames (default: the
    profile's maximum averaging count, so adjacent exposure windows do not
    overlap). n_avg is drawn uniformly inside the sharp or blurry sub-range
    of the profile once the frame's class is fixed.
    """
    if out_len < 1:
        raise ConfigError(f"out_len must be >= 1, got {out_len}")
    stride = profile.avg_max if stride is None else int(stride)
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")

    first = profile.avg_max // 2
    last = first + (out_len - 1) * stride
    need = last + (profile.avg_max + 1) // 2
    if need > video.n_frames:
        raise ConfigError(
            f"video has {video.n_frames} frames but {need} are needed for "
            f"{out_len} outputs at stride {stride}")

    rng = np.random.default_rng(seed)
    labels = _draw_labels(out_len, rng)
    n_avg = np.where(
        labels == 1,
        rng.integers(profile.avg_min, profile.sharp_threshold, size=out_len),
        rng.integers(profile.sharp_threshold, profile.avg_max + 1, size=out_len),
    ).astype(np.int64)

    ts = video.timestamps_us()
    period = video.frame_period_us()
    centers = first + np.arange(out_len) * stride
    frames = np.empty((out_len,) + video.frames.shape[1:], dtype=np.float32)
    gt = np.empty_like(frames)
    windows = np.empty((out_len, 2), dtype=np.int64)
    for i, (c, n) in enumerate(zip(centers, n_avg)):
        frames[i] = blur_average(video, int(c), int(n))
        gt[i] = video.frames[c]
        lo = max(int(c) - int(n) // 2, 0)
        hi = min(int(c) + (int(n) + 1) // 2, video.n_frames)
        windows[i] = (ts[lo], ts[hi - 1] + period)

    return LabeledSequence(frames=frames, gt_frames=gt, labels=labels, n_avg=n_avg,
                           windows_us=windows, profile_name=profile.name,
                           seed=int(seed), fps_virtual=video.fps_virtual)
