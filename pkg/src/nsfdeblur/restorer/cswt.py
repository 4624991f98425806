"""Cross-attention shifted-window transformer over scale-3 feature maps.

Queries come from the temporal neighbor's features, keys and values from
the current frame's, so information flows neighbor -> current. Layers
alternate regular and shifted window partitions; shifted layers roll the
map cyclically and mask attention between positions that were not window
neighbors before the roll. One block is a stack of such layers closed by a
3x3 convolution and a block residual.
"""

from __future__ import annotations

import functools
from typing import List, Optional

import numpy as np

from ..autograd import (Conv2d, LayerNorm, Linear, Module, Tensor, gather_rows,
                        gelu, matmul, pad2d, roll, scale, softmax)
from ..autograd.init import trunc_normal
from ..errors import ShapeError
from .config import CswtConfig

_MASK_VALUE = -100.0


def window_tokens(x: Tensor, win: int) -> Tensor:
    """[1,C,H,W] (H,W multiples of win) -> [nW, win*win, C] window tokens."""
    _, c, h, w = x.shape
    hn, wn = h // win, w // win
    t = x.reshape((c, hn, win, wn, win)).transpose((1, 3, 2, 4, 0))
    return t.reshape((hn * wn, win * win, c))


def window_maps(tokens: Tensor, h: int, w: int, win: int) -> Tensor:
    """Inverse of window_tokens."""
    c = tokens.shape[2]
    hn, wn = h // win, w // win
    t = tokens.reshape((hn, wn, win, win, c)).transpose((4, 0, 2, 1, 3))
    return t.reshape((1, c, h, w))


@functools.lru_cache(maxsize=32)
def _relative_index(win: int) -> np.ndarray:
    """Flattened [N*N] lookup into the (2*win-1)^2 relative-bias table."""
    coords = np.stack(np.meshgrid(np.arange(win), np.arange(win), indexing="ij"))
    flat = coords.reshape(2, -1)
    rel = flat[:, :, None] - flat[:, None, :]
    rel = rel.transpose(1, 2, 0).astype(np.int64)
    rel[:, :, 0] += win - 1
    rel[:, :, 1] += win - 1
    rel[:, :, 0] *= 2 * win - 1
    idx = rel.sum(-1).reshape(-1)
    idx.setflags(write=False)
    return idx


@functools.lru_cache(maxsize=64)
def _shift_mask(h: int, w: int, win: int, shift: int) -> np.ndarray:
    """[nW, 1, N, N] additive mask: -100 between tokens from different
    pre-shift windows, 0 otherwise."""
    img = np.zeros((h, w))
    zone = 0
    spans = (slice(0, -win), slice(-win, -shift), slice(-shift, None))
    for hs in spans:
        for ws in spans:
            img[hs, ws] = zone
            zone += 1
    hn, wn = h // win, w // win
    zones = img.reshape(hn, win, wn, win).transpose(0, 2, 1, 3).reshape(-1, win * win)
    diff = zones[:, None, :] - zones[:, :, None]
    mask = np.where(diff != 0, _MASK_VALUE, 0.0).astype(np.float32)[:, None, :, :]
    mask.setflags(write=False)
    return mask


class WindowCrossLayer(Module):
    """LN -> windowed multi-head cross-attention -> LN -> MLP, residual both."""

    def __init__(self, dim: int, heads: int, win: int, shift: int,
                 mlp_hidden: int, rng: np.random.Generator, dtype=np.float32):
        self.normq = LayerNorm(dim, dtype)
        self.normkv = LayerNorm(dim, dtype)
        self.qproj = Linear(dim, dim, rng, dtype)
        self.kproj = Linear(dim, dim, rng, dtype)
        self.vproj = Linear(dim, dim, rng, dtype)
        self.oproj = Linear(dim, dim, rng, dtype)
        self.bias = Tensor(trunc_normal(((2 * win - 1) ** 2, heads), 0.02, rng, dtype),
                           requires_grad=True)
        self.normmlp = LayerNorm(dim, dtype)
        self.fc1 = Linear(dim, mlp_hidden, rng, dtype)
        self.fc2 = Linear(mlp_hidden, dim, rng, dtype)
        self.dim = dim
        self.heads = heads
        self.win = win
        self.shift = shift

    def _split_heads(self, t: Tensor) -> Tensor:
        nw, n, _ = t.shape
        hd = self.dim // self.heads
        return t.reshape((nw, n, self.heads, hd)).transpose((0, 2, 1, 3))

    def _attention(self, xq: Tensor, kv: Tensor,
                   probe: Optional[list]) -> Tensor:
        _, _, h, w = xq.shape
        if self.shift:
            xq = roll(xq, (-self.shift, -self.shift), (2, 3))
            kv = roll(kv, (-self.shift, -self.shift), (2, 3))
        qt = window_tokens(xq, self.win)
        kvt = window_tokens(kv, self.win)
        n = self.win * self.win
        hd = self.dim // self.heads

        q = self._split_heads(self.qproj(self.normq(qt)))
        k = self._split_heads(self.kproj(self.normkv(kvt)))
        v = self._split_heads(self.vproj(self.normkv(kvt)))

        attn = matmul(scale(q, hd ** -0.5), k.transpose((0, 1, 3, 2)))
        bias = gather_rows(self.bias, _relative_index(self.win))
        attn = attn + bias.reshape((n, n, self.heads)).transpose((2, 0, 1)).reshape((1, self.heads, n, n))
        if self.shift:
            attn = attn + Tensor(_shift_mask(h, w, self.win, self.shift).astype(attn.dtype))
        a = softmax(attn, axis=-1)
        if probe is not None:
            probe.append(a.data.copy())

        out = matmul(a, v).transpose((0, 2, 1, 3)).reshape((qt.shape[0], n, self.dim))
        omap = window_maps(self.oproj(out), h, w, self.win)
        if self.shift:
            omap = roll(omap, (self.shift, self.shift), (2, 3))
        return omap

    def forward(self, xq: Tensor, kv: Tensor, probe: Optional[list] = None) -> Tensor:
        x = xq + self._attention(xq, kv, probe)
        _, c, h, w = x.shape
        tokens = x.reshape((c, h * w)).transpose((1, 0))
        mlp = self.fc2(gelu(self.fc1(self.normmlp(tokens))))
        return x + mlp.transpose((1, 0)).reshape((1, c, h, w))

    __call__ = forward


class CrossAttentionBlock(Module):
    """A stack of alternating regular/shifted layers, a conv, and a residual."""

    def __init__(self, dim: int, cfg: CswtConfig, rng: np.random.Generator,
                 dtype=np.float32):
        shift = cfg.window // 2
        mlp_hidden = max(int(round(dim * cfg.mlp_ratio)), 1)
        self.layer = [WindowCrossLayer(dim, cfg.heads, cfg.window,
                                       0 if i % 2 == 0 else shift,
                                       mlp_hidden, rng, dtype)
                      for i in range(cfg.n_cstl)]
        self.conv = Conv2d(dim, dim, 3, rng, pad=1, dtype=dtype)

    def forward(self, x: Tensor, kv: Tensor, probe: Optional[list] = None) -> Tensor:
        y = x
        for layer in self.layer:
            y = layer(y, kv, probe)
        return x + self.conv(y)

    __call__ = forward


class CrossWindowTransformer(Module):
    """Fuses a neighbor's scale-3 features into the current frame's.

    The neighbor provides the evolving query stream; the current frame's
    (padded) features serve as keys/values for every layer. Both maps are
    zero-padded bottom/right to a window multiple, and the output is
    cropped back.
    """

    def __init__(self, channels: int, cfg: CswtConfig, rng: np.random.Generator,
                 dtype=np.float32):
        cfg.validate()
        dim = cfg.embed_dim
        self.inproj = Conv2d(channels, dim, 1, rng, dtype=dtype) if dim != channels else None
        self.block = [CrossAttentionBlock(dim, cfg, rng, dtype)
                      for _ in range(cfg.n_castb)]
        self.outproj = Conv2d(dim, channels, 1, rng, dtype=dtype) if dim != channels else None
        self.window = cfg.window

    def forward(self, b_cur: Tensor, b_nbr: Tensor,
                probe: Optional[List[np.ndarray]] = None) -> Tensor:
        if b_cur.shape != b_nbr.shape:
            raise ShapeError(f"feature shapes differ: {b_cur.shape} vs {b_nbr.shape}")
        _, _, h, w = b_cur.shape
        pb = (-h) % self.window
        pr = (-w) % self.window
        x = pad2d(b_nbr, 0, pb, 0, pr)
        kv = pad2d(b_cur, 0, pb, 0, pr)
        if self.inproj is not None:
            x = self.inproj(x)
            kv = self.inproj(kv)
        for block in self.block:
            x = block(x, kv, probe)
        if self.outproj is not None:
            x = self.outproj(x)
        return x[:, :, :h, :w]

    __call__ = forward
