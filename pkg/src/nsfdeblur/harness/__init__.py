"""Optimizer, metrics, training loops, and the whole-video pipeline."""

from .config import (TrainConfig, desk_train_config, paper_train_config,
                     parse_config)
from .metrics import PSNR_CAP, psnr, ssim
from .optim import Adam, adam_step, lr_schedule
from .pipeline import (FrameReport, PipelineResult, load_detector,
                       load_restorer, run_pipeline, save_detector,
                       save_restorer, sweep_search_range, write_metrics_csv)
from .training import (EpochLog, TrainResult, train_deblur, train_detector)

__all__ = [
    "TrainConfig", "desk_train_config", "paper_train_config", "parse_config",
    "psnr", "ssim", "PSNR_CAP",
    "Adam", "adam_step", "lr_schedule",
    "train_detector", "train_deblur", "EpochLog", "TrainResult",
    "run_pipeline", "sweep_search_range", "PipelineResult", "FrameReport",
    "save_detector", "load_detector", "save_restorer", "load_restorer",
    "write_metrics_csv",
]
