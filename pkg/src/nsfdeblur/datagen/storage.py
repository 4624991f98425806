"""On-disk dataset layout.

    <dir>/frames/frame_000000.png   8-bit RGB output frames
    <dir>/gt/frame_000000.png       aligned ground-truth sharp frames
    <dir>/labels.csv                index,label,n_avg
    <dir>/events.csv                t_us,x,y,p   (optional)
    <dir>/meta.json                 profile, seed, dims, fps, window bounds

Metadata round-trips exactly; pixels round-trip within 8-bit quantization.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from PIL import Image

from ..errors import DataError
from .blur import LabeledSequence
from .events import EventStream


def quantize_image(img: np.ndarray) -> np.ndarray:
    """Float [0,1] image to bytes, rounding half up (0.5 -> 128)."""
    return np.clip(np.floor(img * 255.0 + 0.5), 0, 255).astype(np.uint8)


def _save_png(path: Path, img: np.ndarray) -> None:
    Image.fromarray(quantize_image(img), mode="RGB").save(path)


def save_image(path, img: np.ndarray) -> None:
    """Quantize a [0,1] float RGB image and write it as a PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _save_png(path, img)


def load_image(path) -> np.ndarray:
    """Read a PNG back into a [0,1] float32 RGB image."""
    return _load_png(Path(path))


def _load_png(path: Path) -> np.ndarray:
    if not path.is_file():
        raise DataError(f"missing frame file {path}")
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def write_dataset(dir_path, sequence: LabeledSequence,
                  events: Optional[EventStream] = None) -> None:
    root = Path(dir_path)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    if sequence.gt_frames is not None:
        (root / "gt").mkdir(parents=True, exist_ok=True)

    for i in range(len(sequence)):
        _save_png(root / "frames" / f"frame_{i:06d}.png", sequence.frames[i])
        if sequence.gt_frames is not None:
            _save_png(root / "gt" / f"frame_{i:06d}.png", sequence.gt_frames[i])

    with open(root / "labels.csv", "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["index", "label", "n_avg"])
        for i in range(len(sequence)):
            wr.writerow([i, int(sequence.labels[i]), int(sequence.n_avg[i])])

    if events is not None:
        with open(root / "events.csv", "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["t_us", "x", "y", "p"])
            for t, x, y, p in zip(events.t_us, events.x, events.y, events.p):
                wr.writerow([int(t), int(x), int(y), int(p)])

    meta = {
        "profile": sequence.profile_name,
        "seed": sequence.seed,
        "height": int(sequence.frames.shape[1]),
        "width": int(sequence.frames.shape[2]),
        "n_frames": len(sequence),
        "fps_virtual": sequence.fps_virtual,
        "windows_us": sequence.windows_us.tolist(),
    }
    with open(root / "meta.json", "w") as f:
        json.dump(meta, f, indent=1)


def read_dataset(dir_path) -> Tuple[LabeledSequence, Optional[EventStream]]:
    root = Path(dir_path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise DataError(f"missing manifest {meta_path}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"corrupt manifest {meta_path}: {e}") from e

    labels_path = root / "labels.csv"
    if not labels_path.is_file():
        raise DataError(f"missing labels file {labels_path}")
    labels, n_avg = [], []
    with open(labels_path, newline="") as f:
        rd = csv.reader(f)
        header = next(rd, None)
        if header != ["index", "label", "n_avg"]:
            raise DataError(f"bad header in {labels_path}: {header}")
        for row in rd:
            try:
                idx, lab, na = int(row[0]), int(row[1]), int(row[2])
            except (ValueError, IndexError) as e:
                raise DataError(f"bad row in {labels_path}: {row}") from e
            if idx != len(labels):
                raise DataError(f"non-contiguous index {idx} in {labels_path}")
            labels.append(lab)
            n_avg.append(na)

    m = int(meta["n_frames"])
    if m != len(labels):
        raise DataError(f"meta says {m} frames, labels.csv has {len(labels)}")

    frames = np.stack([_load_png(root / "frames" / f"frame_{i:06d}.png") for i in range(m)])
    gt = None
    if (root / "gt").is_dir():
        gt = np.stack([_load_png(root / "gt" / f"frame_{i:06d}.png") for i in range(m)])

    windows = np.asarray(meta["windows_us"], dtype=np.int64)
    sequence = LabeledSequence(
        frames=frames, gt_frames=gt,
        labels=np.asarray(labels, dtype=np.int64),
        n_avg=np.asarray(n_avg, dtype=np.int64),
        windows_us=windows,
        profile_name=str(meta["profile"]), seed=int(meta["seed"]),
        fps_virtual=float(meta["fps_virtual"]))

    events = None
    ev_path = root / "events.csv"
    if ev_path.is_file():
        t, x, y, p = [], [], [], []
        with open(ev_path, newline="") as f:
            rd = csv.reader(f)
            header = next(rd, None)
            if header != ["t_us", "x", "y", "p"]:
                raise DataError(f"bad header in {ev_path}: {header}")
            for row in rd:
                try:
                    t.append(int(row[0])); x.append(int(row[1]))
                    y.append(int(row[2])); p.append(int(row[3]))
                except (ValueError, IndexError) as e:
                    raise DataError(f"bad row in {ev_path}: {row}") from e
        events = EventStream(
            t_us=np.asarray(t, dtype=np.int64), x=np.asarray(x, dtype=np.int32),
            y=np.asarray(y, dtype=np.int32), p=np.asarray(p, dtype=np.int8),
            height=int(meta["height"]), width=int(meta["width"]),
            windows_us=windows)
    return sequence, events
