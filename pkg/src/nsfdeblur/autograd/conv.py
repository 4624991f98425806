"""2-d convolution, its transpose, and an independent im2col reference.

The differentiable path accumulates shifted strided slices (one tensordot
per kernel tap), which keeps memory flat and makes the im2col reference a
genuinely separate route for cross-checking. Accumulation happens in
channels-last layout so each tap is a single reshape-free product; the
result is transposed back once.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor, _make


def _conv_out_size(n: int, k: int, stride: int, pad: int) -> int:
    m = n + 2 * pad - k
    if m < 0:
        raise ShapeError(f"kernel {k} larger than padded input {n + 2 * pad}")
    return m // stride + 1


def conv2d(x: Tensor, w: Tensor, b: Optional[Tensor] = None,
           stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlate x [B,Cin,H,W] with w [Cout,Cin,kh,kw]."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d expects 4-d x and w, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv2d channel mismatch: x has {x.shape[1]}, w takes {w.shape[1]}")
    bsz, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    ho = _conv_out_size(h, kh, stride, pad)
    wo = _conv_out_size(wd, kw, stride, pad)

    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    wd_arr = w.data
    acc = np.zeros((bsz, ho, wo, cout), dtype=np.result_type(x.data, wd_arr))
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride]
            acc += np.tensordot(patch, wd_arr[:, :, i, j], axes=((1,), (1,)))
    out = np.ascontiguousarray(acc.transpose(0, 3, 1, 2))
    if b is not None:
        out += b.data[None, :, None, None]

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gp = np.ascontiguousarray(g.transpose(0, 2, 3, 1))  # [B,ho,wo,Cout]
        gxp = np.zeros((bsz, h + 2 * pad, wd + 2 * pad, cin), dtype=g.dtype)
        gw = np.zeros_like(wd_arr)
        for i in range(kh):
            for j in range(kw):
                patch = xp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride]
                gw[:, :, i, j] = np.tensordot(gp, patch, axes=((0, 1, 2), (0, 2, 3)))
                gxp[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :] += \
                    np.tensordot(gp, wd_arr[:, :, i, j], axes=((3,), (0,)))
        gx = gxp.transpose(0, 3, 1, 2)
        if pad:
            gx = gx[:, :, pad:pad + h, pad:pad + wd]
        gx = np.ascontiguousarray(gx)
        if b is None:
            return gx, gw
        gb = g.sum(axis=(0, 2, 3), dtype=np.float64).astype(g.dtype)
        return gx, gw, gb

    return _make(out, parents, backward)


def conv2d_transposed(x: Tensor, w: Tensor, b: Optional[Tensor] = None,
                      stride: int = 1, pad: int = 0) -> Tensor:
    """Transposed convolution of x [B,Cin,H,W] with w [Cin,Cout,kh,kw].

    Output spatial size is (n - 1) * stride - 2 * pad + k per axis.
    """
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d_transposed expects 4-d x and w, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"conv2d_transposed channel mismatch: x has {x.shape[1]}, w takes {w.shape[0]}")
    bsz, cin, h, wd = x.shape
    _, cout, kh, kw = w.shape
    ho = (h - 1) * stride - 2 * pad + kh
    wo = (wd - 1) * stride - 2 * pad + kw
    if ho <= 0 or wo <= 0:
        raise ShapeError(f"conv2d_transposed output would be empty: {ho}x{wo}")
    ch, cw = (h - 1) * stride + kh, (wd - 1) * stride + kw  # canvas before crop

    xd = x.data
    wd_arr = w.data
    canvas = np.zeros((bsz, ch, cw, cout), dtype=np.result_type(xd, wd_arr))
    for i in range(kh):
        for j in range(kw):
            canvas[:, i:i + stride * h:stride, j:j + stride * wd:stride, :] += \
                np.tensordot(xd, wd_arr[:, :, i, j], axes=((1,), (0,)))
    out = np.ascontiguousarray(
        canvas.transpose(0, 3, 1, 2)[:, :, pad:pad + ho, pad:pad + wo])
    if b is not None:
        out += b.data[None, :, None, None]

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gc = np.zeros((bsz, ch, cw, cout), dtype=g.dtype)
        gc[:, pad:pad + ho, pad:pad + wo, :] = g.transpose(0, 2, 3, 1)
        gxp = np.zeros((bsz, h, wd, cin), dtype=g.dtype)
        gw = np.zeros_like(wd_arr)
        for i in range(kh):
            for j in range(kw):
                gslice = gc[:, i:i + stride * h:stride, j:j + stride * wd:stride, :]
                gxp += np.tensordot(gslice, wd_arr[:, :, i, j], axes=((3,), (1,)))
                gw[:, :, i, j] = np.tensordot(xd, gslice, axes=((0, 2, 3), (0, 1, 2)))
        gx = np.ascontiguousarray(gxp.transpose(0, 3, 1, 2))
        if b is None:
            return gx, gw
        gb = g.sum(axis=(0, 2, 3), dtype=np.float64).astype(g.dtype)
        return gx, gw, gb

    return _make(out, parents, backward)


def conv2d_im2col(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray] = None,
                  stride: int = 1, pad: int = 0) -> np.ndarray:
    """Plain-numpy conv reference: lower to columns, then one matmul.

    Kept deliberately independent of conv2d so the two can be compared.
    """
    bsz, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    ho = _conv_out_size(h, kh, stride, pad)
    wo = _conv_out_size(wd, kw, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x

    cols = np.empty((bsz, cin * kh * kw, ho * wo), dtype=x.dtype)
    for bi in range(bsz):
        col = np.empty((cin, kh, kw, ho, wo), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                col[:, i, j] = xp[bi, :, i:i + stride * ho:stride, j:j + stride * wo:stride]
        cols[bi] = col.reshape(cin * kh * kw, ho * wo)

    wmat = w.reshape(cout, cin * kh * kw)
    out = np.matmul(wmat, cols).reshape(bsz, cout, ho, wo)
    if b is not None:
        out = out + b[None, :, None, None]
    return out
