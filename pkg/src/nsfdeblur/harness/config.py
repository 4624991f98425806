"""Training configuration: dataclass, presets, and key=value file parsing."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

from ..errors import ConfigError
from ..restorer.config import RestorerConfig, desk_config, paper_config


@dataclass
class TrainConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch: int = 1
    patch: int = 48
    epochs: int = 500
    lr_halve_every: int = 200
    detector_epochs: int = 20
    detector_lr: float = 1e-3
    detector_segments: int = 16
    detector_dim: int = 64
    contrastive_weight: float = 10.0
    search_range: int = 7
    seed: int = 0
    profile: str = "gopro_like"
    variant: str = "full"
    use_detector_labels: bool = False
    use_events: bool = False
    restorer: RestorerConfig = field(default_factory=desk_config)

    def validate(self) -> "TrainConfig":
        if self.lr <= 0 or self.adam_eps <= 0:
            raise ConfigError("lr and adam_eps must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("betas must sit in (0, 1)")
        if self.detector_lr <= 0:
            raise ConfigError("detector_lr must be positive")
        if min(self.batch, self.patch, self.epochs, self.lr_halve_every,
               self.detector_epochs, self.detector_segments, self.detector_dim,
               self.search_range) < 1:
            raise ConfigError("counts and sizes must be positive")
        self.restorer.validate()
        return self


def desk_train_config() -> TrainConfig:
    return TrainConfig()


def paper_train_config() -> TrainConfig:
    """Published hyperparameters; selectable for parity runs, not desk use."""
    return TrainConfig(lr=1e-4, batch=12, patch=200, epochs=500,
                       lr_halve_every=200, detector_epochs=20,
                       detector_lr=1e-4, detector_dim=512,
                       restorer=paper_config())


_PRESETS = {"desk": desk_train_config, "paper": paper_train_config}

# keys settable from a config file, besides the scalar TrainConfig fields
_RESTORER_KEYS = {"c", "n_res_encoder", "n_res_decoder"}
_CSWT_KEYS = {"n_castb", "n_cstl", "heads", "window", "embed_dim", "mlp_ratio"}


def _coerce(raw: str, kind: type):
    if kind is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r}: {exc}") from None


def parse_config(path: Union[str, Path],
                 base: Optional[TrainConfig] = None) -> TrainConfig:
    """Read a line-oriented `key = value` file over a preset base.

    `preset = desk|paper` must come first if present. `#` starts a comment.
    Restorer keys (c, n_res_encoder, n_res_decoder) and attention keys
    (n_castb, n_cstl, heads, window, embed_dim, mlp_ratio) reach into the
    nested configs; every other key must be a TrainConfig field.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cfg = base if base is not None else desk_train_config()
    scalars = {f.name: f.type for f in fields(TrainConfig)
               if f.name != "restorer"}

    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {line!r}")
        key, raw = (s.strip() for s in text.split("=", 1))
        if key == "preset":
            if raw not in _PRESETS:
                raise ConfigError(f"{path}:{lineno}: unknown preset {raw!r}")
            cfg = _PRESETS[raw]()
        elif key in scalars:
            kind = type(getattr(cfg, key))
            setattr(cfg, key, _coerce(raw, kind))
        elif key in _RESTORER_KEYS:
            kind = type(getattr(cfg.restorer, key))
            cfg.restorer = replace(cfg.restorer, **{key: _coerce(raw, kind)})
        elif key in _CSWT_KEYS:
            kind = type(getattr(cfg.restorer.cswt, key))
            cswt = replace(cfg.restorer.cswt, **{key: _coerce(raw, kind)})
            cfg.restorer = replace(cfg.restorer, cswt=cswt)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")

    if cfg.use_events != cfg.restorer.use_events:
        cfg.restorer = replace(cfg.restorer, use_events=cfg.use_events)
    return cfg.validate()
