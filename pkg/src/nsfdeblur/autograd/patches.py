"""Patch lowering (unfold/fold) and bilinear resizing, all differentiable.

Row layout: unfold flattens each patch as [C, k, k] in row-major order and
stacks patches row-major over the output grid, so row t corresponds to grid
position (t // Wo, t % Wo). fold inverts that layout, averaging overlapping
contributions by the per-pixel cover count.
"""

from __future__ import annotations

import functools

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .tensor import Tensor, _make


def patch_grid(h: int, w: int, k: int, pad: int, stride: int) -> tuple[int, int]:
    """Patch grid dimensions (rows, cols) for a padded sliding window."""
    mh, mw = h + 2 * pad - k, w + 2 * pad - k
    if mh < 0 or mw < 0:
        raise ShapeError(f"window {k} exceeds padded extent of {h}x{w} input")
    if stride < 1:
        raise ShapeError(f"stride must be positive, got {stride}")
    return mh // stride + 1, mw // stride + 1


def patch_count(h: int, w: int, k: int, pad: int, stride: int) -> int:
    """Number of sliding-window patches over a padded h x w map."""
    gh, gw = patch_grid(h, w, k, pad, stride)
    return gh * gw


def unfold(x: Tensor, k: int, pad: int, stride: int) -> Tensor:
    """Extract sliding patches from x [1,C,H,W] into rows [L, C*k*k]."""
    if x.ndim != 4 or x.shape[0] != 1:
        raise ShapeError(f"unfold expects [1,C,H,W], got {x.shape}")
    _, c, h, w = x.shape
    gh, gw = patch_grid(h, w, k, pad, stride)

    xp = np.pad(x.data[0], ((0, 0), (pad, pad), (pad, pad))) if pad else x.data[0]
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    rows = win.transpose(1, 2, 0, 3, 4).reshape(gh * gw, c * k * k).copy()

    hp, wp = h + 2 * pad, w + 2 * pad

    def backward(g):
        gr = g.reshape(gh, gw, c, k, k).transpose(2, 0, 1, 3, 4)
        gxp = np.zeros((c, hp, wp), dtype=g.dtype)
        for i in range(k):
            for j in range(k):
                gxp[:, i:i + stride * gh:stride, j:j + stride * gw:stride] += gr[:, :, :, i, j]
        gx = gxp[:, pad:pad + h, pad:pad + w] if pad else gxp
        return (gx[None],)

    return _make(rows, (x,), backward)


@functools.lru_cache(maxsize=64)
def _cover_count(h: int, w: int, k: int, pad: int, stride: int) -> np.ndarray:
    """How many patches cover each padded pixel. Zeros are mapped to 1 so the
    fold divide is safe; uncovered pixels hold zero anyway."""
    gh, gw = patch_grid(h, w, k, pad, stride)
    cnt = np.zeros((h + 2 * pad, w + 2 * pad), dtype=np.float64)
    for i in range(k):
        for j in range(k):
            cnt[i:i + stride * gh:stride, j:j + stride * gw:stride] += 1.0
    cnt[cnt == 0] = 1.0
    cnt.setflags(write=False)
    return cnt


def fold(rows: Tensor, h: int, w: int, k: int, pad: int, stride: int) -> Tensor:
    """Assemble unfold rows back into a map [1,C,h,w], averaging overlaps."""
    if rows.ndim != 2:
        raise ShapeError(f"fold expects rows [L, C*k*k], got {rows.shape}")
    gh, gw = patch_grid(h, w, k, pad, stride)
    if rows.shape[0] != gh * gw:
        raise ShapeError(f"fold got {rows.shape[0]} rows, grid needs {gh * gw}")
    if rows.shape[1] % (k * k) != 0:
        raise ShapeError(f"fold row width {rows.shape[1]} is not a multiple of k*k={k * k}")
    c = rows.shape[1] // (k * k)
    cnt = _cover_count(h, w, k, pad, stride)

    rp = rows.data.reshape(gh, gw, c, k, k).transpose(2, 0, 1, 3, 4)
    acc = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=rows.data.dtype)
    for i in range(k):
        for j in range(k):
            acc[:, i:i + stride * gh:stride, j:j + stride * gw:stride] += rp[:, :, :, i, j]
    acc /= cnt.astype(rows.data.dtype)
    out = acc[None, :, pad:pad + h, pad:pad + w].copy()

    def backward(g):
        gp = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=g.dtype)
        gp[:, pad:pad + h, pad:pad + w] = g[0]
        gp /= cnt.astype(g.dtype)
        gr = np.empty((c, gh, gw, k, k), dtype=g.dtype)
        for i in range(k):
            for j in range(k):
                gr[:, :, :, i, j] = gp[:, i:i + stride * gh:stride, j:j + stride * gw:stride]
        return (gr.transpose(1, 2, 0, 3, 4).reshape(gh * gw, c * k * k),)

    return _make(out, (rows,), backward)


@functools.lru_cache(maxsize=64)
def _bilinear_geometry(n: int, factor: int):
    """Source indices and weights for half-pixel-center upsampling by factor."""
    dst = np.arange(n * factor, dtype=np.float64)
    src = np.clip((dst + 0.5) / factor - 0.5, 0.0, n - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n - 1)
    frac = src - i0
    return i0, i1, frac


def resize_bilinear(x: Tensor, factor: int) -> Tensor:
    """Upsample x [B,C,H,W] spatially by an integer factor (half-pixel centers,
    edges clamped)."""
    if x.ndim != 4:
        raise ShapeError(f"resize_bilinear expects [B,C,H,W], got {x.shape}")
    factor = int(factor)
    if factor < 1:
        raise ShapeError(f"resize factor must be >= 1, got {factor}")
    if factor == 1:
        return x[:]
    b, c, h, w = x.shape
    y0, y1, fy = _bilinear_geometry(h, factor)
    x0, x1, fx = _bilinear_geometry(w, factor)

    xd = x.data
    dt = xd.dtype
    wy0, wy1 = (1.0 - fy).astype(dt)[:, None], fy.astype(dt)[:, None]
    wx0, wx1 = (1.0 - fx).astype(dt)[None, :], fx.astype(dt)[None, :]
    terms = (
        (y0, x0, wy0 * wx0),
        (y0, x1, wy0 * wx1),
        (y1, x0, wy1 * wx0),
        (y1, x1, wy1 * wx1),
    )
    out = np.zeros((b, c, h * factor, w * factor), dtype=dt)
    for iy, ix, wt in terms:
        out += xd[:, :, iy[:, None], ix[None, :]] * wt

    def backward(g):
        gx = np.zeros_like(xd)
        for iy, ix, wt in terms:
            np.add.at(gx, (slice(None), slice(None), iy[:, None], ix[None, :]), g * wt)
        return (gx,)

    return _make(out, (x,), backward)
