"""Training loops for the blur detector and the restoration network."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..autograd import Tensor, no_grad
from ..datagen.blur import LabeledSequence
from ..datagen.events import EventStream
from ..detector.losses import detector_loss
from ..detector.model import DetectorModel, classify, detect_labels
from ..detector.quintuples import Quintuple, build_quintuples
from ..errors import ConfigError, DataError
from ..eventfusion import voxelize
from ..restorer import Restorer, l1_loss
from .config import TrainConfig
from .optim import Adam, lr_schedule

SEGMENT = 5


@dataclass
class EpochLog:
    epoch: int
    loss: float
    accuracy: Optional[float] = None


@dataclass
class TrainResult:
    log: List[EpochLog] = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.log[0].loss

    @property
    def final_loss(self) -> float:
        return self.log[-1].loss


def _segment_starts(seq_len: int, rng: np.random.Generator) -> int:
    return int(rng.integers(0, max(seq_len - SEGMENT, 0) + 1))


def train_detector(cfg: TrainConfig, dataset: Sequence[LabeledSequence]
                   ) -> Tuple[DetectorModel, TrainResult]:
    """Fit the detector on 5-frame segments drawn from labeled sequences.

    Each epoch draws ``cfg.detector_segments`` random segments from every
    sequence and visits all draws in one shuffled order. The contrastive
    term compares segment features against the (detached) features of the
    ground-truth sharp frames.
    """
    if not dataset:
        raise ConfigError("train_detector needs a non-empty dataset")
    lam = cfg.contrastive_weight
    if lam != 0.0:
        for seq in dataset:
            if seq.gt_frames is None:
                raise DataError(
                    "contrastive training needs ground-truth frames; "
                    "set contrastive_weight = 0 for datasets without gt")

    rng = np.random.default_rng(cfg.seed)
    model = DetectorModel(cfg.detector_dim, rng)
    opt = Adam(model.params(), lr=cfg.detector_lr, betas=(cfg.beta1, cfg.beta2),
               eps=cfg.adam_eps)
    result = TrainResult()

    for epoch in range(cfg.detector_epochs):
        opt.lr = lr_schedule(cfg.detector_lr, epoch, cfg.lr_halve_every)
        order = rng.permutation(len(dataset) * cfg.detector_segments)
        total = 0.0
        hits = 0
        seen = 0
        for si in order:
            seq = dataset[si % len(dataset)]
            lo = _segment_starts(len(seq.frames), rng)
            hi = min(lo + SEGMENT, len(seq.frames))
            frames = seq.frames[lo:hi]
            labels = np.asarray(seq.labels[lo:hi], dtype=np.float32)

            o, z = model.detect_probs(frames)
            if lam != 0.0:
                with no_grad():
                    z_gt = Tensor(np.stack(
                        [model.extract_features(f).data
                         for f in seq.gt_frames[lo:hi]]))
            else:
                z_gt = Tensor(z.data.copy())
            loss = detector_loss(o, labels, z, z_gt, lam)

            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item()
            hits += int((classify(o) == labels.astype(np.int64)).sum())
            seen += len(frames)
        result.log.append(EpochLog(epoch, total / len(order), hits / seen))
    return model, result


def _random_crop(rng: np.random.Generator, h: int, w: int, patch: int
                 ) -> Tuple[int, int, int]:
    """Crop origin and size; the size stays a multiple of 4 and fits."""
    size = min(patch, h, w)
    size -= size % 4
    if size < 4:
        raise ConfigError(f"frames {h}x{w} too small for a 4-multiple crop")
    y0 = int(rng.integers(0, h - size + 1))
    x0 = int(rng.integers(0, w - size + 1))
    return y0, x0, size


def _crop_quintuple(q: Quintuple, y0: int, x0: int, size: int) -> Quintuple:
    return Quintuple(indices=q.indices,
                     frames=q.frames[:, y0:y0 + size, x0:x0 + size],
                     used_fallback=q.used_fallback)


def _sequence_quintuples(cfg: TrainConfig, seq: LabeledSequence,
                         detector: Optional[DetectorModel]) -> list[Quintuple]:
    if cfg.use_detector_labels:
        if detector is None:
            raise ConfigError("use_detector_labels requires a detector model")
        _, labels = detect_labels(detector, seq.frames)
    else:
        labels = np.asarray(seq.labels)
    return build_quintuples(seq.frames, labels, cfg.search_range)


def train_deblur(cfg: TrainConfig,
                 dataset: Sequence[Tuple[LabeledSequence, Optional[EventStream]]],
                 variant: str = "full",
                 detector: Optional[DetectorModel] = None
                 ) -> Tuple[Restorer, TrainResult]:
    """Overfit/train the restorer on quintuples drawn from labeled sequences.

    Every epoch visits all quintuples once in a shuffled order; one random
    crop window is shared by the five frames, the ground truth, and the
    event voxel. Ground-truth labels drive quintuple construction unless
    cfg.use_detector_labels is set.
    """
    if not dataset:
        raise ConfigError("train_deblur needs a non-empty dataset")
    if cfg.use_events and not cfg.restorer.use_events:
        raise ConfigError("cfg.use_events set but the restorer config disables events")

    rng = np.random.default_rng(cfg.seed)
    model = Restorer(cfg.restorer, rng)
    opt = Adam(model.params(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2),
               eps=cfg.adam_eps)

    entries = []  # (quintuple, gt frame, voxel or None)
    for seq, events in dataset:
        if seq.gt_frames is None:
            raise DataError("train_deblur needs ground-truth frames")
        if cfg.use_events and events is None:
            raise DataError("cfg.use_events set but a sequence has no events")
        h, w = seq.frames.shape[1:3]
        for q in _sequence_quintuples(cfg, seq, detector):
            vox = None
            if cfg.use_events:
                t0, t1 = seq.windows_us[q.center]
                vox = voxelize(events, (int(t0), int(t1)), h, w)
            entries.append((q, seq.gt_frames[q.center], vox))

    result = TrainResult()
    for epoch in range(cfg.epochs):
        opt.lr = lr_schedule(cfg.lr, epoch, cfg.lr_halve_every)
        total = 0.0
        for ei in rng.permutation(len(entries)):
            q, gt, vox = entries[ei]
            h, w = q.frames.shape[1:3]
            y0, x0, size = _random_crop(rng, h, w, cfg.patch)
            qc = _crop_quintuple(q, y0, x0, size)
            gtc = gt[y0:y0 + size, x0:x0 + size]
            voxc = (Tensor(vox[None, :, y0:y0 + size, x0:x0 + size])
                    if vox is not None else None)

            pred = model(qc, voxel=voxc, variant=variant)
            gt_t = Tensor(np.ascontiguousarray(
                gtc.transpose(2, 0, 1))[None].astype(model.dtype))
            loss = l1_loss(pred, gt_t)

            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item()
        result.log.append(EpochLog(epoch, total / len(entries)))
    return model, result
