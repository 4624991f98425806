"""Restoration network configuration and named presets."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import ConfigError


@dataclass(frozen=True)
class CswtConfig:
    """Cross-attention shifted-window transformer sizes."""

    n_castb: int = 2          # attention blocks
    n_cstl: int = 2           # layers per block; even, so regular/shifted pair up
    heads: int = 4
    window: int = 8
    embed_dim: int = 32       # defaults to 4C when built via RestorerConfig
    mlp_ratio: float = 2.0

    def validate(self) -> None:
        if self.n_cstl % 2:
            raise ConfigError(f"layers per block must be even, got {self.n_cstl}")
        if self.embed_dim % self.heads:
            raise ConfigError(
                f"embed dim {self.embed_dim} not divisible by {self.heads} heads")
        if min(self.n_castb, self.n_cstl, self.heads, self.window, self.embed_dim) < 1:
            raise ConfigError("all transformer sizes must be positive")


@dataclass(frozen=True)
class RestorerConfig:
    """Full restoration model configuration (C is the scale-1 width)."""

    c: int = 8
    cswt: CswtConfig = field(default_factory=CswtConfig)
    n_res_encoder: int = 1
    n_res_decoder: int = 3
    use_events: bool = False
    event_channels: int = 40

    def validate(self) -> None:
        if self.c < 1:
            raise ConfigError(f"channel width must be positive, got {self.c}")
        self.cswt.validate()
        if self.n_res_encoder < 0 or self.n_res_decoder < 0:
            raise ConfigError("residual block counts must be nonnegative")
        if self.use_events and self.event_channels < 1:
            raise ConfigError("event channel count must be positive")


def desk_config(use_events: bool = False) -> RestorerConfig:
    """Small configuration trainable on a CPU in minutes."""
    return RestorerConfig(c=8,
                          cswt=CswtConfig(n_castb=2, n_cstl=2, heads=4, window=8,
                                          embed_dim=32, mlp_ratio=2.0),
                          n_res_encoder=1, n_res_decoder=3, use_events=use_events)


def paper_config(use_events: bool = False) -> RestorerConfig:
    """Published sizes: C=32, 6 blocks of 6 layers, 8 heads."""
    return RestorerConfig(c=32,
                          cswt=CswtConfig(n_castb=6, n_cstl=6, heads=8, window=8,
                                          embed_dim=128, mlp_ratio=2.0),
                          n_res_encoder=1, n_res_decoder=3, use_events=use_events)


def gradcheck_config() -> RestorerConfig:
    """Tiny configuration for finite-difference verification: C=4, one
    attention block of two layers. Residual block counts are trimmed so the
    parameter sweep finishes quickly; the wiring is identical."""
    return RestorerConfig(c=4,
                          cswt=CswtConfig(n_castb=1, n_cstl=2, heads=2, window=4,
                                          embed_dim=16, mlp_ratio=1.0),
                          n_res_encoder=1, n_res_decoder=1)


_PRESETS = {
    "desk": desk_config,
    "paper": paper_config,
    "gradcheck": gradcheck_config,
}


def restorer_preset(name: str, use_events: bool = False) -> RestorerConfig:
    try:
        maker = _PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown model preset {name!r}; known: {sorted(_PRESETS)}") from None
    cfg = maker() if name == "gradcheck" else maker(use_events=use_events)
    if name == "gradcheck" and use_events:
        cfg = replace(cfg, use_events=True)
    return cfg
