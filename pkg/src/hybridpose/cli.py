"""Command line interface: synth, train, eval, ablate, parse-biwi.

Every subcommand accepts ``--config FILE`` pointing at a plain text file of
``key = value`` lines ('#' starts a comment; keys use underscores or dashes
interchangeably).  Explicit flags override file values.  Output files are
written to a temporary sibling and renamed into place, so a failing run
never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
from pathlib import Path

from .angles import PoseAngles, mae, rotation_to_euler
from .binning import make_hierarchy
from .data import (
    AnnotationRecord,
    ParseError,
    format_annotation_csv,
    format_predictions_csv,
    parse_annotation_csv,
    parse_biwi_pose,
)
from .loss import LossWeights
from .synth import SynthConfig, format_dataset, load_dataset, make_dataset
from .tinynet import NetConfig, checkpoint_text, load_checkpoint, train

__all__ = ["main", "build_parser", "DEFAULT_WEIGHT_GRID"]

# Default ablation grid: five classification-weight rows at alpha 2, then
# the remaining regression-weight sweep (the alpha=2 row is already above).
DEFAULT_WEIGHT_GRID = (
    (2.0, 1.0, 0.0, 0.0, 0.0, 0.0),
    (2.0, 3.0, 1.0, 1.0, 1.0, 1.0),
    (2.0, 5.0, 3.0, 1.0, 1.0, 1.0),
    (2.0, 7.0, 5.0, 3.0, 1.0, 1.0),
    (2.0, 9.0, 7.0, 5.0, 3.0, 1.0),
    (0.1, 7.0, 5.0, 3.0, 1.0, 1.0),
    (1.0, 7.0, 5.0, 3.0, 1.0, 1.0),
    (4.0, 7.0, 5.0, 3.0, 1.0, 1.0),
)


def _write_atomic(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def load_config_file(path) -> dict[str, str]:
    """Read ``key = value`` lines; '#' comments and blank lines are skipped."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise ParseError("empty key", line=lineno)
            values[key] = value.strip()
    return values


class _Options:
    """Merged view of CLI flags and config file values (flags win)."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        config = getattr(args, "config", None)
        self.file_values = load_config_file(config) if config else {}

    def get(self, name: str, convert, default=None, required: bool = False):
        value = getattr(self.args, name, None)
        if value is None and name in self.file_values:
            raw = self.file_values[name]
            try:
                value = convert(raw)
            except (ValueError, TypeError) as exc:
                raise ValueError(f"config value {name} = {raw!r}: {exc}") from None
        if value is None:
            value = default
        if value is None and required:
            raise ValueError(f"missing required option --{name.replace('_', '-')}")
        return value


def _pair(text) -> tuple[float, float]:
    if isinstance(text, tuple):
        return text
    parts = str(text).split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'lo,hi', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _float_list(text) -> tuple[float, ...]:
    if isinstance(text, tuple):
        return text
    return tuple(float(p) for p in str(text).split(","))


def _int_list(text) -> tuple[int, ...]:
    if isinstance(text, tuple):
        return text
    return tuple(int(p) for p in str(text).split(","))


def _fmt(value: float) -> str:
    return f"{value:g}"


def _mae_table(report) -> str:
    header = f"{'Yaw':>9} {'Pitch':>9} {'Roll':>9} {'MAE':>9}"
    row = (
        f"{report.yaw_mae:9.4f} {report.pitch_mae:9.4f} "
        f"{report.roll_mae:9.4f} {report.mean_mae:9.4f}"
    )
    return header + "\n" + row


def _metrics_csv(report) -> str:
    return (
        "yaw_mae,pitch_mae,roll_mae,mean_mae,n_samples\n"
        f"{report.yaw_mae!r},{report.pitch_mae!r},{report.roll_mae!r},"
        f"{report.mean_mae!r},{report.n_samples}\n"
    )


def cmd_synth(args: argparse.Namespace) -> int:
    opt = _Options(args)
    cfg = SynthConfig(
        n_samples=opt.get("n", int, 2500),
        seed=opt.get("seed", int, 0),
        yaw_range=opt.get("yaw_range", _pair, (-75.0, 75.0)),
        pitch_range=opt.get("pitch_range", _pair, (-60.0, 60.0)),
        roll_range=opt.get("roll_range", _pair, (-50.0, 50.0)),
        noise_sigma=opt.get("noise_sigma", float, 0.01),
        val_fraction=opt.get("val_fraction", float, 0.2),
    )
    out_train = opt.get("out_train", str, required=True)
    out_val = opt.get("out_val", str, required=True)
    train_samples, val_samples = make_dataset(cfg)
    _write_atomic(out_train, format_dataset(train_samples))
    _write_atomic(out_val, format_dataset(val_samples))
    print(f"wrote {len(train_samples)} train samples to {out_train}")
    print(f"wrote {len(val_samples)} val samples to {out_val}")
    return 0


def _train_report_csv(report, hierarchy) -> str:
    ce_cols = ",".join(f"ce_{s.n_bins}" for s in hierarchy.levels)
    lines = [f"epoch,total,regression,{ce_cols},val_yaw_mae,val_pitch_mae,val_roll_mae,val_mean_mae"]
    for i in range(report.epochs):
        val = report.val_reports[i]
        cells = [
            str(i + 1),
            repr(report.epoch_total[i]),
            repr(report.epoch_regression[i]),
            *(repr(c) for c in report.epoch_ce_terms[i]),
            repr(val.yaw_mae),
            repr(val.pitch_mae),
            repr(val.roll_mae),
            repr(val.mean_mae),
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _run_training(opt: _Options, seed: int, train_samples, val_samples, weights):
    hidden = opt.get("hidden", _int_list, (64, 64))
    config = NetConfig(
        input_dim=len(train_samples[0].features),
        hidden_dims=hidden,
        hierarchy=make_hierarchy(),
        seed=seed,
    )
    return train(
        config,
        train_samples,
        val_samples,
        weights,
        epochs=opt.get("epochs", int, 30),
        learning_rate=opt.get("lr", float, 1e-3),
        batch_size=opt.get("batch_size", int, 64),
        mse_scale=opt.get("mse_scale", str, "degrees"),
        convention=opt.get("decode_convention", str, "center"),
    )


def cmd_train(args: argparse.Namespace) -> int:
    opt = _Options(args)
    train_samples = load_dataset(opt.get("train", str, required=True))
    val_samples = load_dataset(opt.get("val", str, required=True))
    alpha = opt.get("alpha", float, 2.0)
    betas = opt.get("betas", _float_list, (7.0, 5.0, 3.0, 1.0, 1.0))
    weights = LossWeights(alpha, betas)
    checkpoint_out = opt.get("checkpoint_out", str, required=True)
    report_out = opt.get("report_out", str)

    net, report = _run_training(opt, opt.get("seed", int, 0), train_samples, val_samples, weights)

    _write_atomic(checkpoint_out, checkpoint_text(net))
    if report_out:
        _write_atomic(report_out, _train_report_csv(report, net.config.hierarchy))

    print(f"alpha = {_fmt(weights.alpha)}")
    print(f"betas = {','.join(_fmt(b) for b in weights.betas)}")
    print(f"epochs = {report.epochs}")
    final = report.final_val
    if final is not None:
        print(
            f"final val MAE: yaw={final.yaw_mae:.4f} pitch={final.pitch_mae:.4f} "
            f"roll={final.roll_mae:.4f} mean={final.mean_mae:.4f}"
        )
    print(f"training time: {report.wall_seconds:.1f}s")
    print(f"checkpoint: {checkpoint_out}")
    return 0


def _match_by_id(pred_records, truth_records):
    pred_by_id = {r.sample_id: r for r in pred_records}
    truth_by_id = {r.sample_id: r for r in truth_records}
    missing_pred = sorted(set(truth_by_id) - set(pred_by_id))
    missing_truth = sorted(set(pred_by_id) - set(truth_by_id))
    if missing_pred or missing_truth:
        parts = []
        if missing_pred:
            parts.append(f"missing from predictions: {', '.join(missing_pred[:10])}")
        if missing_truth:
            parts.append(f"missing from truths: {', '.join(missing_truth[:10])}")
        raise ValueError("prediction/truth id mismatch; " + "; ".join(parts))
    pairs = [(pred_by_id[r.sample_id].pose, r.pose) for r in truth_records]
    return [p for p, _ in pairs], [t for _, t in pairs]


def cmd_eval(args: argparse.Namespace) -> int:
    opt = _Options(args)
    pred_path = opt.get("pred", str)
    truth_path = opt.get("truth", str)
    ckpt_path = opt.get("checkpoint", str)
    data_path = opt.get("data", str)

    if pred_path and truth_path:
        preds = parse_annotation_csv(Path(pred_path).read_text())
        truths = parse_annotation_csv(Path(truth_path).read_text())
        pred_poses, truth_poses = _match_by_id(preds, truths)
        report = mae(pred_poses, truth_poses)
    elif ckpt_path and data_path:
        net = load_checkpoint(ckpt_path)
        samples = load_dataset(data_path)
        convention = opt.get("decode_convention", str, "center")
        pred_poses = [net.predict(s.features, convention=convention) for s in samples]
        truth_poses = [s.truth for s in samples]
        report = mae(pred_poses, truth_poses)
        pred_out = opt.get("pred_out", str)
        if pred_out:
            ids = [str(i) for i in range(len(samples))]
            _write_atomic(pred_out, format_predictions_csv(ids, pred_poses, truth_poses))
    else:
        raise ValueError("provide either --pred and --truth, or --checkpoint and --data")

    print(_mae_table(report))
    out = opt.get("out", str)
    if out:
        _write_atomic(out, _metrics_csv(report))
    return 0


def _load_grid_file(path) -> tuple[tuple[float, ...], ...]:
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            values = _float_list(line)
            if len(values) != 6:
                raise ParseError(
                    f"expected 6 comma-separated weights (alpha then 5 betas), got {len(values)}",
                    line=lineno,
                )
            rows.append(values)
    return tuple(rows)


def cmd_ablate(args: argparse.Namespace) -> int:
    opt = _Options(args)
    train_samples = load_dataset(opt.get("train", str, required=True))
    val_samples = load_dataset(opt.get("val", str, required=True))
    seeds = opt.get("seeds", _int_list, (0, 1, 2, 3, 4))
    grid_file = opt.get("grid_file", str)
    grid = _load_grid_file(grid_file) if grid_file else DEFAULT_WEIGHT_GRID
    if not grid:
        raise ValueError("weight grid is empty")
    if opt.get("epochs", int, 30) < 1:
        raise ValueError("ablate needs at least 1 epoch")

    medians = []
    for row in grid:
        weights = LossWeights(row[0], row[1:])
        finals = []
        for seed in seeds:
            _, report = _run_training(opt, seed, train_samples, val_samples, weights)
            finals.append(report.final_val.mean_mae)
        medians.append(statistics.median(finals))
        print(
            f"row alpha={_fmt(row[0])} betas={','.join(_fmt(b) for b in row[1:])}: "
            f"median val MAE {medians[-1]:.4f}",
            file=sys.stderr,
        )
    best = medians.index(min(medians))

    print("expectation decoding: bin centers"
          if opt.get("decode_convention", str, "center") == "center"
          else "expectation decoding: bin left edges")
    header = f"{'alpha':>7} " + " ".join(f"{f'beta{i+1}':>7}" for i in range(5))
    print(f"{header} {'median_mae':>11} best")
    lines_csv = ["alpha,beta1,beta2,beta3,beta4,beta5,median_val_mean_mae,best"]
    for i, (row, med) in enumerate(zip(grid, medians)):
        flag = "*" if i == best else ""
        cells = " ".join(f"{v:7g}" for v in row)
        print(f"{cells} {med:11.4f} {flag:>4}")
        lines_csv.append(",".join([*(repr(float(v)) for v in row), repr(med), str(int(i == best))]))
    out = opt.get("out", str)
    if out:
        _write_atomic(out, "\n".join(lines_csv) + "\n")
    return 0


def cmd_parse_biwi(args: argparse.Namespace) -> int:
    opt = _Options(args)
    directory = Path(opt.get("dir", str, required=True))
    out = opt.get("out", str, required=True)
    pattern = opt.get("pattern", str, "*.txt")
    tol = opt.get("tol", float, 1e-6)
    if not directory.is_dir():
        raise ValueError(f"not a directory: {directory}")

    records = []
    rejected = 0
    for path in sorted(directory.glob(pattern)):
        try:
            rotation, _ = parse_biwi_pose(path.read_text(), tol=tol)
            pose = rotation_to_euler(rotation, tol=tol)
        except (ValueError, OSError) as exc:
            rejected += 1
            print(f"skipped {path.name}: {exc}", file=sys.stderr)
            continue
        records.append(AnnotationRecord(path.stem, pose, source="biwi"))
    _write_atomic(out, format_annotation_csv(records))
    print(f"parsed {len(records)} file(s), rejected {rejected}, wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridpose",
        description="Coarse-to-fine bin classification pose estimation tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic pose dataset")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--n", type=int, help="total samples before the split (default 2500)")
    p.add_argument("--seed", type=int, help="dataset seed (default 0)")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, help="feature noise (default 0.01)")
    p.add_argument("--val-fraction", dest="val_fraction", type=float, help="validation share (default 0.2)")
    p.add_argument("--yaw-range", dest="yaw_range", type=_pair, help="'lo,hi' degrees (default -75,75)")
    p.add_argument("--pitch-range", dest="pitch_range", type=_pair, help="'lo,hi' degrees (default -60,60)")
    p.add_argument("--roll-range", dest="roll_range", type=_pair, help="'lo,hi' degrees (default -50,50)")
    p.add_argument("--out-train", dest="out_train", help="training split output path")
    p.add_argument("--out-val", dest="out_val", help="validation split output path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on dataset files")
    p.add_argument("--config")
    p.add_argument("--train", help="training dataset path")
    p.add_argument("--val", help="validation dataset path")
    p.add_argument("--epochs", type=int, help="default 30")
    p.add_argument("--lr", type=float, help="Adam learning rate (default 1e-3)")
    p.add_argument("--batch-size", dest="batch_size", type=int, help="default 64")
    p.add_argument("--alpha", type=float, help="regression weight (default 2)")
    p.add_argument("--betas", type=_float_list, help="per-level weights (default 7,5,3,1,1)")
    p.add_argument("--seed", type=int, help="init/shuffle seed (default 0)")
    p.add_argument("--hidden", type=_int_list, help="trunk widths (default 64,64)")
    p.add_argument("--mse-scale", dest="mse_scale", choices=("degrees", "bins"))
    p.add_argument("--decode-convention", dest="decode_convention", choices=("center", "edge"))
    p.add_argument("--checkpoint-out", dest="checkpoint_out", help="checkpoint output path")
    p.add_argument("--report-out", dest="report_out", help="per-epoch CSV output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="report MAE from predictions or a checkpoint")
    p.add_argument("--config")
    p.add_argument("--pred", help="predictions CSV (id,yaw,pitch,roll)")
    p.add_argument("--truth", help="ground truth CSV (id,yaw,pitch,roll)")
    p.add_argument("--checkpoint", help="checkpoint to evaluate")
    p.add_argument("--data", help="dataset file to evaluate on")
    p.add_argument("--decode-convention", dest="decode_convention", choices=("center", "edge"))
    p.add_argument("--out", help="metrics CSV output path")
    p.add_argument("--pred-out", dest="pred_out", help="per-sample predictions CSV output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train over a weight grid and rank rows")
    p.add_argument("--config")
    p.add_argument("--train")
    p.add_argument("--val")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seeds", type=_int_list, help="comma list (default 0,1,2,3,4)")
    p.add_argument("--hidden", type=_int_list)
    p.add_argument("--mse-scale", dest="mse_scale", choices=("degrees", "bins"))
    p.add_argument("--decode-convention", dest="decode_convention", choices=("center", "edge"))
    p.add_argument("--grid-file", dest="grid_file", help="one 'alpha,b1..b5' row per line")
    p.add_argument("--out", help="results CSV output path")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("parse-biwi", help="convert a directory of pose files to CSV")
    p.add_argument("--config")
    p.add_argument("--dir", help="directory of pose text files")
    p.add_argument("--pattern", help="glob within the directory (default *.txt)")
    p.add_argument("--tol", type=float, help="orthonormality tolerance (default 1e-6)")
    p.add_argument("--out", help="annotation CSV output path")
    p.set_defaults(func=cmd_parse_biwi)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
