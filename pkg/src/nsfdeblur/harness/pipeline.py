"""Whole-video restoration: detect labels, build quintuples, restore, score.

Also holds the checkpoint helpers. Checkpoints are plain tensor-record
files; model hyperparameters ride along as `meta.*` scalar records so a
checkpoint is self-describing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..autograd import Tensor, load_checkpoint, no_grad, save_checkpoint
from ..datagen.storage import read_dataset, save_image
from ..detector.model import DetectorModel, detect_labels
from ..detector.quintuples import build_quintuples
from ..errors import ConfigError, DataError
from ..eventfusion import voxelize
from ..imgutil import chw_to_image
from ..restorer import CswtConfig, Restorer, RestorerConfig
from .metrics import psnr, ssim

PathLike = Union[str, Path]

METRICS_HEADER = ["index", "psnr", "ssim", "used_fallback_minus",
                  "used_fallback_plus"]


def _meta(value) -> np.ndarray:
    return np.asarray(float(value), dtype=np.float64)


def save_detector(model: DetectorModel, path: PathLike) -> None:
    state = model.state_dict()
    state["meta.d"] = _meta(model.d)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(path, state)


def load_detector(path: PathLike) -> DetectorModel:
    state = load_checkpoint(path)
    if "meta.d" not in state:
        raise DataError(f"{path} is not a detector checkpoint (no meta.d)")
    d = int(state.pop("meta.d"))
    model = DetectorModel(d)
    model.load_state(state)
    return model


_RESTORER_META = ("c", "n_res_encoder", "n_res_decoder", "use_events",
                  "event_channels")
_CSWT_META = ("n_castb", "n_cstl", "heads", "window", "embed_dim", "mlp_ratio")


def save_restorer(model: Restorer, path: PathLike) -> None:
    state = model.state_dict()
    for name in _RESTORER_META:
        state[f"meta.{name}"] = _meta(getattr(model.cfg, name))
    for name in _CSWT_META:
        state[f"meta.{name}"] = _meta(getattr(model.cfg.cswt, name))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(path, state)


def load_restorer(path: PathLike) -> Restorer:
    state = load_checkpoint(path)
    meta = {}
    for name in _RESTORER_META + _CSWT_META:
        key = f"meta.{name}"
        if key not in state:
            raise DataError(f"{path} is not a restorer checkpoint (no {key})")
        meta[name] = float(state.pop(key))
    cswt = CswtConfig(n_castb=int(meta["n_castb"]), n_cstl=int(meta["n_cstl"]),
                      heads=int(meta["heads"]), window=int(meta["window"]),
                      embed_dim=int(meta["embed_dim"]),
                      mlp_ratio=meta["mlp_ratio"])
    cfg = RestorerConfig(c=int(meta["c"]), cswt=cswt,
                         n_res_encoder=int(meta["n_res_encoder"]),
                         n_res_decoder=int(meta["n_res_decoder"]),
                         use_events=bool(meta["use_events"]),
                         event_channels=int(meta["event_channels"]))
    model = Restorer(cfg, np.random.default_rng(0))
    model.load_state(state)
    return model


@dataclass
class FrameReport:
    index: int
    psnr: Optional[float]
    ssim: Optional[float]
    used_fallback_minus: bool
    used_fallback_plus: bool


@dataclass
class PipelineResult:
    scores: np.ndarray
    labels: np.ndarray
    reports: List[FrameReport]
    out_dir: Path

    @property
    def mean_psnr(self) -> float:
        vals = [r.psnr for r in self.reports if r.psnr is not None]
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def mean_ssim(self) -> float:
        vals = [r.ssim for r in self.reports if r.ssim is not None]
        return float(np.mean(vals)) if vals else float("nan")


def write_metrics_csv(path: PathLike, reports: Sequence[FrameReport]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for r in reports:
            writer.writerow([r.index,
                             "" if r.psnr is None else f"{r.psnr:.6f}",
                             "" if r.ssim is None else f"{r.ssim:.6f}",
                             int(r.used_fallback_minus),
                             int(r.used_fallback_plus)])


def run_pipeline(detector: DetectorModel, restorer: Restorer,
                 data_dir: PathLike, out_dir: PathLike, n: int = 7,
                 use_events: bool = False, eps: float = 0.5,
                 variant: str = "full", metrics_name: str = "metrics.csv",
                 frames_subdir: str = "restored") -> PipelineResult:
    """Restore every frame of a dataset directory.

    Labels come from the detector over the whole video; each frame gets a
    quintuple (nearest sharp within n per side, i+-2 fallback otherwise)
    and a restored PNG under out_dir/restored/. When the dataset carries
    ground truth, a metrics CSV is written next to them.
    """
    if n < 1:
        raise ConfigError(f"search range must be positive, got {n}")
    seq, events = read_dataset(data_dir)
    if use_events:
        if restorer.event is None:
            raise ConfigError("events requested but the restorer has no event module")
        if events is None:
            raise DataError(f"events requested but {data_dir} has no events.csv")

    out_dir = Path(out_dir)
    scores, labels = detect_labels(detector, seq.frames, eps)
    quintuples = build_quintuples(seq.frames, labels, n)
    h, w = seq.frames.shape[1:3]

    reports: List[FrameReport] = []
    for i, q in enumerate(quintuples):
        voxel = None
        if use_events:
            t0, t1 = seq.windows_us[i]
            voxel = Tensor(voxelize(events, (int(t0), int(t1)), h, w)[None])
        with no_grad():
            pred = restorer(q, voxel=voxel, variant=variant)
        img = np.clip(chw_to_image(pred), 0.0, 1.0)
        save_image(out_dir / frames_subdir / f"frame_{i:06d}.png", img)

        p = s = None
        if seq.gt_frames is not None:
            gt = seq.gt_frames[i]
            p = psnr(img, gt)
            s = ssim(img, gt)
        reports.append(FrameReport(i, p, s, *q.used_fallback))

    if seq.gt_frames is not None:
        write_metrics_csv(out_dir / metrics_name, reports)
    return PipelineResult(scores, labels, reports, out_dir)


def sweep_search_range(detector: DetectorModel, restorer: Restorer,
                       data_dir: PathLike, out_dir: PathLike,
                       ns: Sequence[int] = (3, 5, 7),
                       **kwargs) -> List[Tuple[int, PipelineResult]]:
    """Run the pipeline once per search range, one metrics file each."""
    results = []
    for n in ns:
        res = run_pipeline(detector, restorer, data_dir, Path(out_dir), n=n,
                           metrics_name=f"metrics_n{n}.csv",
                           frames_subdir=f"restored_n{n}", **kwargs)
        results.append((n, res))
    return results
