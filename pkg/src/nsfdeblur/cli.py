"""Command line interface.

Subcommands: synth, train-detector, detect, train-deblur, deblur, eval,
gradcheck. Exit codes: 0 success, 2 config/usage error, 3 data error,
4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .autograd import Tensor, gelu, layer_norm, matmul, softmax, sum_
from .autograd.conv import conv2d, conv2d_transposed
from .autograd.gradcheck import grad_check
from .datagen import (EventStream, LabeledSequence, get_profile,
                      make_labeled_sequence, read_dataset, synth_events,
                      synth_video, write_dataset)
from .detector.model import detect_labels
from .detector.quintuples import build_quintuples
from .errors import ConfigError, DataError, NsfError, NumericError, ShapeError
from .harness import (TrainConfig, desk_train_config, load_detector,
                      load_restorer, parse_config, run_pipeline, save_detector,
                      save_restorer, sweep_search_range, train_deblur,
                      train_detector)
from .restorer.config import gradcheck_config
from .restorer.model import Restorer, l1_loss

GRADCHECK_TOL = 1e-4


def _load_config(path: Optional[str], seed: Optional[int]) -> TrainConfig:
    cfg = parse_config(path) if path else desk_train_config()
    if seed is not None:
        cfg.seed = seed
    return cfg.validate()


def _sequence_dirs(data: str) -> List[Path]:
    """A dataset path is either one sequence directory or a parent of them."""
    root = Path(data)
    if (root / "labels.csv").is_file():
        return [root]
    if root.is_dir():
        found = sorted(p for p in root.iterdir() if (p / "labels.csv").is_file())
        if found:
            return found
    raise DataError(f"no sequence (labels.csv) found under {root}")


def _read_events_csv(path: Path, height: int, width: int,
                     windows_us: np.ndarray) -> EventStream:
    if not path.is_file():
        raise DataError(f"events file not found: {path}")
    t, x, y, p = [], [], [], []
    with open(path, newline="") as f:
        rd = csv.reader(f)
        header = next(rd, None)
        if header != ["t_us", "x", "y", "p"]:
            raise DataError(f"bad header in {path}: {header}")
        for row in rd:
            try:
                t.append(int(row[0])); x.append(int(row[1]))
                y.append(int(row[2])); p.append(int(row[3]))
            except (ValueError, IndexError) as exc:
                raise DataError(f"bad row in {path}: {row}") from exc
    return EventStream(t_us=np.asarray(t, dtype=np.int64),
                       x=np.asarray(x, dtype=np.int32),
                       y=np.asarray(y, dtype=np.int32),
                       p=np.asarray(p, dtype=np.int8),
                       height=height, width=width, windows_us=windows_us)


def _load_sequences(data: str, events_path: Optional[str]
                    ) -> List[Tuple[LabeledSequence, Optional[EventStream]]]:
    out = []
    for d in _sequence_dirs(data):
        seq, events = read_dataset(d)
        if events_path:
            events = _read_events_csv(Path(events_path), seq.frames.shape[1],
                                      seq.frames.shape[2], seq.windows_us)
        out.append((seq, events))
    return out


# ---------------------------------------------------------------- synth

def _parse_velocity(raw: Optional[str]) -> Optional[Tuple[float, float]]:
    if raw is None:
        return None
    parts = raw.split(",")
    if len(parts) != 2:
        raise ConfigError(f"velocity must be VX,VY, got {raw!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise ConfigError(f"bad velocity {raw!r}: {exc}") from None


def cmd_synth(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    velocity = _parse_velocity(args.velocity)
    stride = profile.avg_max
    need = profile.avg_max // 2 + (args.frames - 1) * stride \
        + (profile.avg_max + 1) // 2
    out = Path(args.out)
    for k in range(args.sequences):
        seed = args.seed + k
        video = synth_video(args.height, args.width, need, seed,
                            n_sprites=args.sprites, velocity=velocity)
        seq = make_labeled_sequence(video, profile, args.frames,
                                    seed=seed + 10_000)
        events = synth_events(video, windows=seq.windows_us) if args.events else None
        target = out if args.sequences == 1 else out / f"seq_{k:03d}"
        write_dataset(target, seq, events)
        print(f"wrote {len(seq)} frames to {target}"
              + (f" ({len(events)} events)" if events is not None else ""))
    return 0


# ------------------------------------------------------------- training

def cmd_train_detector(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args.seed)
    dataset = [seq for seq, _ in _load_sequences(args.data, None)]
    model, result = train_detector(cfg, dataset)
    for entry in result.log:
        print(f"epoch {entry.epoch}: loss {entry.loss:.4f} "
              f"acc {entry.accuracy:.3f}")
    save_detector(model, args.out)
    print(f"saved detector to {args.out}")
    return 0


def cmd_train_deblur(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args.seed)
    if args.variant:
        cfg.variant = args.variant
    if args.events is not None:
        cfg.use_events = True
        cfg.restorer = replace(cfg.restorer, use_events=True)
    detector = load_detector(args.detector) if args.detector else None
    if detector is not None:
        cfg.use_detector_labels = True
    dataset = _load_sequences(args.data, args.events or None)
    if cfg.use_events:
        for _, events in dataset:
            if events is None:
                raise DataError("events requested but no events.csv available")
    model, result = train_deblur(cfg, dataset, variant=cfg.variant,
                                 detector=detector)
    for entry in result.log:
        print(f"epoch {entry.epoch}: loss {entry.loss:.6f}")
    save_restorer(model, args.out)
    print(f"saved restorer to {args.out}")
    return 0


# ------------------------------------------------------------ inference

def cmd_detect(args: argparse.Namespace) -> int:
    model = load_detector(args.model)
    seq, _ = read_dataset(args.data)
    scores, labels = detect_labels(model, seq.frames, args.eps)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["index", "o", "label"])
        for i, (o, lab) in enumerate(zip(scores, labels)):
            wr.writerow([i, f"{float(o):.6f}", int(lab)])
    print(f"wrote {len(labels)} rows to {out}")
    return 0


def cmd_deblur(args: argparse.Namespace) -> int:
    detector = load_detector(args.detector)
    restorer = load_restorer(args.model)
    result = run_pipeline(detector, restorer, args.data, args.out,
                          n=args.n, use_events=args.events is not None,
                          eps=args.eps, variant=args.variant)
    msg = f"restored {len(result.reports)} frames to {Path(args.out) / 'restored'}"
    if result.mean_psnr is not None:
        msg += f"  psnr {result.mean_psnr:.2f} ssim {result.mean_ssim:.4f}"
    print(msg)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    detector = load_detector(args.detector)
    restorer = load_restorer(args.model)
    if args.sweep:
        results = sweep_search_range(detector, restorer, args.data, args.out,
                                     use_events=args.events is not None,
                                     eps=args.eps, variant=args.variant)
        for n, res in results:
            if res.mean_psnr is None:
                print(f"n={n}: no ground truth, metrics skipped")
            else:
                print(f"n={n}: psnr {res.mean_psnr:.2f} ssim {res.mean_ssim:.4f}")
    else:
        res = run_pipeline(detector, restorer, args.data, args.out, n=args.n,
                           use_events=args.events is not None, eps=args.eps,
                           variant=args.variant)
        if res.mean_psnr is None:
            print("no ground truth, metrics skipped")
        else:
            print(f"psnr {res.mean_psnr:.2f} ssim {res.mean_ssim:.4f}")
    return 0


# ------------------------------------------------------------ gradcheck

def _op_battery(rng: np.random.Generator) -> List[Tuple[str, float]]:
    """Finite-difference checks of a few core ops at tiny float64 sizes."""
    results = []

    x = Tensor(rng.standard_normal((2, 3, 6, 6)), requires_grad=True)
    w = Tensor(0.3 * rng.standard_normal((4, 3, 3, 3)), requires_grad=True)
    b = Tensor(0.1 * rng.standard_normal(4), requires_grad=True)
    results.append(("conv2d", grad_check(
        lambda: sum_(conv2d(x, w, b, stride=2, pad=1)), [x, w, b])))

    wt = Tensor(0.3 * rng.standard_normal((3, 2, 2, 2)), requires_grad=True)
    results.append(("conv2d_transposed", grad_check(
        lambda: sum_(conv2d_transposed(x, wt, None, stride=2)), [x, wt])))

    a = Tensor(rng.standard_normal((5, 4)), requires_grad=True)
    m = Tensor(rng.standard_normal((4, 6)), requires_grad=True)
    g = Tensor(rng.standard_normal(6), requires_grad=True)
    bb = Tensor(rng.standard_normal(6), requires_grad=True)
    results.append(("matmul+layer_norm+gelu", grad_check(
        lambda: sum_(gelu(layer_norm(matmul(a, m), g, bb))), [a, m, g, bb])))

    s = Tensor(rng.standard_normal((3, 7)), requires_grad=True)
    mix = Tensor(rng.standard_normal((7, 2)))
    results.append(("softmax", grad_check(
        lambda: sum_(matmul(softmax(s, axis=-1), mix)), [s])))
    return results


def cmd_gradcheck(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    results = _op_battery(rng)

    frames = rng.random((5, 16, 16, 3)).astype(np.float64)
    labels = [1, 0, 0, 0, 1]
    q = build_quintuples(frames, labels, n=2)[2]
    model = Restorer(gradcheck_config(), rng, dtype=np.float64)
    target = Tensor(rng.random((1, 3, 16, 16)))
    samples = None if args.full else args.samples
    err = grad_check(lambda: l1_loss(model(q), target),
                     list(model.params()), samples=samples, seed=args.seed)
    results.append(("restorer e2e (l1)", err))

    worst = 0.0
    for name, e in results:
        print(f"{name}: max rel err {e:.3e}")
        worst = max(worst, e)
    if worst >= GRADCHECK_TOL:
        raise NumericError(f"gradient check failed: {worst:.3e} >= {GRADCHECK_TOL}")
    print(f"all gradients within {GRADCHECK_TOL}")
    return 0


# ----------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsf",
        description="Video deblurring with nearest-sharp-frame aggregation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled toy dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sequences", type=int, default=1)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--frames", type=int, default=6)
    p.add_argument("--profile", default="gopro_like")
    p.add_argument("--sprites", type=int, default=None)
    p.add_argument("--velocity", default=None, metavar="VX,VY")
    p.add_argument("--events", action="store_true",
                   help="also simulate and write events.csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-detector", help="fit the sharpness detector")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="detector.ckpt")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train_detector)

    p = sub.add_parser("detect", help="score frames with a trained detector")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--out", default="labels_pred.csv")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("train-deblur", help="fit the restoration network")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="restorer.ckpt")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--variant", default=None,
                   choices=("full", "cross_only", "self_plus_global", "self_only"))
    p.add_argument("--detector", default=None,
                   help="detector checkpoint; enables predicted labels")
    p.add_argument("--events", default=None, metavar="EVENTS.CSV",
                   help="event stream; enables the event branch")
    p.set_defaults(func=cmd_train_deblur)

    p = sub.add_parser("deblur", help="restore a video with trained models")
    p.add_argument("--model", required=True)
    p.add_argument("--detector", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="deblurred")
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--variant", default="full",
                   choices=("full", "cross_only", "self_plus_global", "self_only"))
    p.add_argument("--events", default=None, metavar="EVENTS.CSV")
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser("eval", help="restore and score against ground truth")
    p.add_argument("--model", required=True)
    p.add_argument("--detector", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="evaluation")
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--sweep", action="store_true",
                   help="search ranges 3, 5, 7; one metrics file each")
    p.add_argument("--variant", default="full",
                   choices=("full", "cross_only", "self_plus_global", "self_only"))
    p.add_argument("--events", default=None, metavar="EVENTS.CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=25,
                   help="checked entries per tensor in the end-to-end pass")
    p.add_argument("--full", action="store_true",
                   help="check every entry (slow)")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ShapeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except NsfError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
