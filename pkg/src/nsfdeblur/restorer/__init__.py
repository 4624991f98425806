"""Restoration network: encoder, cross-attention fusion, matching, decoder."""

from .config import (CswtConfig, RestorerConfig, desk_config, gradcheck_config,
                     paper_config, restorer_preset)
from .cswt import (CrossAttentionBlock, CrossWindowTransformer,
                   WindowCrossLayer, window_maps, window_tokens)
from .decoder import DecoderStage, DirectionConv, OutputHead, ScaleAggregator
from .encoder import Encoder, EncoderStage, ScaleFeatures
from .matching import (SCALE_UNFOLD, MatchResult, fold_by_index, global_match)
from .model import VARIANTS, AggregatorBank, Restorer, l1_loss

__all__ = [
    "CswtConfig", "RestorerConfig", "desk_config", "paper_config",
    "gradcheck_config", "restorer_preset",
    "window_tokens", "window_maps", "WindowCrossLayer", "CrossAttentionBlock",
    "CrossWindowTransformer",
    "Encoder", "EncoderStage", "ScaleFeatures",
    "MatchResult", "global_match", "fold_by_index", "SCALE_UNFOLD",
    "ScaleAggregator", "DirectionConv", "DecoderStage", "OutputHead",
    "Restorer", "AggregatorBank", "VARIANTS", "l1_loss",
]
