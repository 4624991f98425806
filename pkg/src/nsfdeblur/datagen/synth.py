"""Procedural sharp video synthesis.

Stands in for captured high-FPS footage: a textured static background plus
a few rigid sprites translating at constant sub-pixel velocities, rendered
with smooth (anti-aliased) profiles so temporal averaging produces genuine
motion blur.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import ConfigError


@dataclass
class SharpVideo:
    """High-rate sharp frames [T, H, W, 3], float32 in [0, 1]."""

    frames: np.ndarray
    fps_virtual: float
    seed: int

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def timestamps_us(self) -> np.ndarray:
        """Timestamp of each frame in integer microseconds."""
        period = 1e6 / self.fps_virtual
        return np.round(np.arange(self.n_frames) * period).astype(np.int64)

    def frame_period_us(self) -> int:
        return int(round(1e6 / self.fps_virtual))


def _bounce(pos: float, lo: float, hi: float) -> float:
    """Fold an unconstrained coordinate into [lo, hi] by reflection."""
    span = hi - lo
    if span <= 0:
        return (lo + hi) / 2.0
    m = (pos - lo) % (2.0 * span)
    return lo + (span - abs(m - span))


@dataclass
class _Sprite:
    kind: str                 # "blob" or "box"
    center: Tuple[float, float]   # (cx, cy) at frame 0, pixel units
    velocity: Tuple[float, float]  # (vx, vy) pixels per frame; vx moves columns
    radius: float
    amplitude: float
    bounds: Tuple[float, float, float, float]  # (x_lo, x_hi, y_lo, y_hi)
    color: np.ndarray = field(default_factory=lambda: np.ones(3, dtype=np.float64))

    def render(self, t: int, yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
        cx = _bounce(self.center[0] + self.velocity[0] * t, self.bounds[0], self.bounds[1])
        cy = _bounce(self.center[1] + self.velocity[1] * t, self.bounds[2], self.bounds[3])
        if self.kind == "blob":
            d2 = (xx - cx) ** 2 + (yy - cy) ** 2
            mask = np.exp(-0.5 * d2 / (self.radius ** 2))
        else:
            # soft-edged square: product of sigmoid ramps, ~1.5 px edge width
            edge = 1.5
            sx = 1.0 / (1.0 + np.exp(-(xx - (cx - self.radius)) / edge))
            sx *= 1.0 / (1.0 + np.exp((xx - (cx + self.radius)) / edge))
            sy = 1.0 / (1.0 + np.exp(-(yy - (cy - self.radius)) / edge))
            sy *= 1.0 / (1.0 + np.exp((yy - (cy + self.radius)) / edge))
            mask = sx * sy
        return self.amplitude * mask[:, :, None] * self.color[None, None, :]


def _place(rng: np.random.Generator, lo: float, hi: float, span: float) -> float:
    """Draw a start coordinate whose linear trajectory of ``span`` stays in
    [lo, hi] when possible; otherwise anywhere in [lo, hi] (bouncing takes
    over)."""
    feas_lo = lo + max(0.0, -span)
    feas_hi = hi - max(0.0, span)
    if feas_hi > feas_lo:
        return float(rng.uniform(feas_lo, feas_hi))
    if hi > lo:
        return float(rng.uniform(lo, hi))
    return (lo + hi) / 2.0


def _texture_background(h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    cells = rng.uniform(0.08, 0.5, size=(max(h // 8, 2), max(w // 8, 2), 3))
    up = np.kron(cells, np.ones((8, 8, 1)))[:h, :w, :]
    if up.shape[0] < h or up.shape[1] < w:
        up = np.pad(up, ((0, h - up.shape[0]), (0, w - up.shape[1]), (0, 0)), mode="edge")
    return gaussian_filter(up, sigma=(3.0, 3.0, 0.0))


def synth_video(h: int, w: int, n_frames: int, seed: int, *,
                n_sprites: Optional[int] = None,
                velocity: Optional[Tuple[float, float]] = None,
                background: str = "texture",
                fps_virtual: float = 960.0) -> SharpVideo:
    """Render a deterministic sharp video.

    h and w must be multiples of 4. ``velocity`` (vx, vy), when given,
    overrides every sprite's velocity; ``background="black"`` drops the
    texture (useful for tracking a lone sprite).
    """
    if h % 4 or w % 4:
        raise ConfigError(f"frame dimensions must be multiples of 4, got {h}x{w}")
    if n_frames < 2:
        raise ConfigError(f"need at least 2 frames, got {n_frames}")
    if background not in ("texture", "black"):
        raise ConfigError(f"unknown background {background!r}")

    rng = np.random.default_rng(seed)
    bg = _texture_background(h, w, rng) if background == "texture" else np.zeros((h, w, 3))

    count = int(rng.integers(2, 5)) if n_sprites is None else int(n_sprites)
    sprites = []
    for _ in range(count):
        kind = "blob" if rng.random() < 0.5 else "box"
        radius = float(rng.uniform(min(h, w) / 16, min(h, w) / 8))
        # keep the profile's tails inside the frame so truncation never
        # distorts motion; start inside the whole trajectory when it fits,
        # otherwise bounce off the margins
        margin = 2.5 * radius + 2.0
        v = velocity if velocity is not None else (float(rng.uniform(-1.5, 1.5)),
                                                   float(rng.uniform(-1.5, 1.5)))
        span_x, span_y = v[0] * (n_frames - 1), v[1] * (n_frames - 1)
        cx = _place(rng, margin, w - margin, span_x)
        cy = _place(rng, margin, h - margin, span_y)
        amp = float(rng.uniform(0.25, 0.45))
        color = rng.uniform(0.5, 1.0, size=3)
        sprites.append(_Sprite(kind, (cx, cy), v, radius, amp,
                               (margin, w - margin, margin, h - margin), color))

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    frames = np.empty((n_frames, h, w, 3), dtype=np.float32)
    for t in range(n_frames):
        img = bg.copy()
        for s in sprites:
            img += s.render(t, yy, xx)
        frames[t] = np.clip(img, 0.0, 1.0).astype(np.float32)
    return SharpVideo(frames=frames, fps_virtual=float(fps_virtual), seed=int(seed))


def intensity_centroid(frame: np.ndarray) -> Tuple[float, float]:
    """Brightness-weighted (column, row) centroid of one frame."""
    lum = frame.astype(np.float64).mean(axis=2)
    total = lum.sum()
    if total <= 0:
        return (0.0, 0.0)
    ys, xs = np.mgrid[0:frame.shape[0], 0:frame.shape[1]]
    return float((lum * xs).sum() / total), float((lum * ys).sum() / total)
