"""The restoration network: encoder, neighbor fusion, global matching, decoder.

A quintuple {g_minus, prev, cur, next, g_plus} is restored by encoding all
five frames at three scales, fusing the two temporal neighbors into the
current frame with windowed cross-attention, transplanting globally matched
patches from the two sharp frames at every scale, and decoding back to an
RGB image. Ablation variants rewire the same weights: "self_only" feeds the
current frame to both cross-attention calls and skips matching,
"cross_only" skips matching, "self_plus_global" self-attends but keeps
matching, "full" uses everything.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..autograd import (Conv2d, Module, Tensor, abs_, astype, concat_channels,
                        mean, resize_bilinear)
from ..detector.quintuples import Quintuple
from ..errors import ConfigError, ShapeError
from ..eventfusion import EventEncoder, EventFusion
from ..imgutil import to_chw_tensor
from .config import RestorerConfig
from .cswt import CrossWindowTransformer
from .decoder import DecoderStage, OutputHead, ScaleAggregator
from .encoder import Encoder
from .matching import MatchResult, fold_by_index, global_match

VARIANTS = ("full", "cross_only", "self_plus_global", "self_only")


class AggregatorBank(Module):
    """Independent aggregation convs for each decoder scale."""

    def __init__(self, c: int, rng: np.random.Generator, dtype=np.float32):
        self.s3 = ScaleAggregator(4 * c, rng, dtype)
        self.s2 = ScaleAggregator(2 * c, rng, dtype)
        self.s1 = ScaleAggregator(c, rng, dtype)


class Restorer(Module):
    """Five-frame deblurring network over a detected quintuple."""

    def __init__(self, cfg: RestorerConfig, rng: np.random.Generator,
                 dtype=np.float32):
        cfg.validate()
        c = cfg.c
        self.encoder = Encoder(c, cfg.n_res_encoder, rng, dtype)
        self.cswt = CrossWindowTransformer(4 * c, cfg.cswt, rng, dtype)
        self.fuse = Conv2d(12 * c, 4 * c, 3, rng, pad=1, dtype=dtype)
        self.agg = AggregatorBank(c, rng, dtype)
        self.dec2 = DecoderStage(4 * c, cfg.n_res_decoder, rng, dtype)
        self.dec1 = DecoderStage(2 * c, cfg.n_res_decoder, rng, dtype)
        self.head = OutputHead(c, cfg.n_res_decoder, rng, dtype)
        self.event = EventFusion(4 * c, rng, dtype) if cfg.use_events else None
        self.event_enc = (EventEncoder(c, rng, cfg.event_channels, dtype)
                          if cfg.use_events else None)
        self.cfg = cfg
        self.dtype = dtype

    def forward(self, q: Quintuple, voxel: Optional[Tensor] = None,
                variant: str = "full") -> Tensor:
        """Restore the center frame of a quintuple to an RGB image tensor."""
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}; pick from {VARIANTS}")
        if voxel is not None and self.event is None:
            raise ConfigError("event voxel passed to a model built without events")
        use_nbrs = variant in ("full", "cross_only")
        use_global = variant in ("full", "self_plus_global")

        g_minus, prev, cur, nxt, g_plus = (to_chw_tensor(q.frames[i], self.dtype)
                                           for i in range(5))
        if voxel is not None and voxel.dtype != self.dtype:
            voxel = astype(voxel, self.dtype)
        e_cur = self.encoder(cur)
        e_prev = self.encoder(prev) if use_nbrs else e_cur
        e_next = self.encoder(nxt) if use_nbrs else e_cur

        bp = self.cswt(e_cur.s3, e_prev.s3)
        bn = self.cswt(e_cur.s3, e_next.s3)
        f = self.fuse(concat_channels([bp, e_cur.s3, bn]))

        o = None
        if self.event is not None and voxel is not None:
            e_feat = self.event_enc(voxel)
            f, o = self.event.fuse(f, e_feat)

        if use_global:
            e_gp = self.encoder(g_plus)
            e_gm = self.encoder(g_minus)
            mp = global_match(e_gp.s3, f)
            mm = global_match(e_gm.s3, f)
            d3 = self.agg.s3(f,
                             fold_by_index(e_gp.s3, mp.index, 3),
                             fold_by_index(e_gm.s3, mm.index, 3),
                             mp.confidence_map(), mm.confidence_map())
        else:
            d3 = f

        d = self.dec2(d3)
        if o is not None:
            d = self.event.reweight(d, o, 2)
        if use_global:
            d = self.agg.s2(d,
                            fold_by_index(e_gp.s2, mp.index, 2),
                            fold_by_index(e_gm.s2, mm.index, 2),
                            resize_bilinear(mp.confidence_map(), 2),
                            resize_bilinear(mm.confidence_map(), 2))

        d = self.dec1(d)
        if o is not None:
            d = self.event.reweight(d, o, 4)
        if use_global:
            d = self.agg.s1(d,
                            fold_by_index(e_gp.s1, mp.index, 1),
                            fold_by_index(e_gm.s1, mm.index, 1),
                            resize_bilinear(mp.confidence_map(), 4),
                            resize_bilinear(mm.confidence_map(), 4))

        return self.head(d)

    __call__ = forward


def l1_loss(pred: Tensor, gt: Tensor) -> Tensor:
    """Mean absolute error over all elements."""
    if pred.shape != gt.shape:
        raise ShapeError(f"loss shapes differ: {pred.shape} vs {gt.shape}")
    return mean(abs_(pred - gt))
