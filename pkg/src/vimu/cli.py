"""Command-line front door: synth, preprocess, train, finetune, eval, report.

Every command is driven by one JSON config plus flag overrides, and every
output embeds the effective config, so identical (config, seed) invocations
produce byte-identical files.

Exit codes: 0 success, 1 usage, 2 I/O, 3 empty data, 4 shape/config
(training divergence also maps to 4: it is a bad training configuration).
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio, metrics
from .config import derive_seed, load_pipeline_config, parse_set_value
from .errors import (
    ConfigurationError,
    DivergenceError,
    EmptyDataError,
    ValidationError,
)
from .kinematics import Shape
from .net import TrainConfig, fine_tune, load_checkpoint, save_checkpoint, train
from .net.network import Network
from .net.training import trace_tsv
from .pipeline import (
    FilterPolicy,
    LabeledSequence,
    WindowDataset,
    apply_filter,
    assemble_features,
    normalize_apply,
    normalize_fit,
    segment_windows,
    split,
    upsample_class,
)
from .sensors import synthesize_sequence, with_acceleration_noise


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="vimu", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_common(p):
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None,
                       help="root directory for all outputs")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (stages are deterministic; 1 default)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config entry, e.g. window.length=30")
        p.add_argument("--split-by-subject", action="store_true",
                       help="split train/test by subject instead of stratified")
        p.add_argument("--add-gravity", action="store_true",
                       help="report specific force instead of raw acceleration")

    p_synth = sub.add_parser("synth", help="pose sequences -> virtual IMU files")
    add_common(p_synth)
    p_pre = sub.add_parser("preprocess",
                           help="IMU files -> filtered, windowed train/test datasets")
    add_common(p_pre)
    p_train = sub.add_parser("train", help="train the network on train.windows")
    add_common(p_train)
    p_ft = sub.add_parser("finetune",
                          help="FC-only fine-tuning of a checkpoint on new data")
    add_common(p_ft)
    p_ft.add_argument("--checkpoint", required=True)
    p_ft.add_argument("--dataset", default=None,
                      help="windows file to tune on (default: finetune_dataset "
                           "or dataset path /train.windows)")
    p_eval = sub.add_parser("eval", help="evaluate a checkpoint, write metrics")
    add_common(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--dataset", default=None,
                        help="windows file to evaluate (default: dataset path "
                             "/test.windows)")
    p_report = sub.add_parser("report",
                              help="render summary.txt and the confusion heatmap")
    add_common(p_report)
    return parser


def _load_config(args):
    if args.threads < 1:
        raise UsageError(f"--threads must be >= 1, got {args.threads}")
    sets = []
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set needs KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        sets.append((key, parse_set_value(value)))
    if args.split_by_subject:
        sets.append(("split.by_subject", True))
    if args.add_gravity:
        sets.append(("synthesis.add_gravity", True))
    return load_pipeline_config(args.config, args.seed, args.out, sets)


def _require_dir(path: Path, what):
    if not path.is_dir():
        raise FileNotFoundError(f"{path}: no such {what} directory")
    return path


def _provenance(cfg):
    return {"config": cfg.effective, "seed": cfg.seed}


# ---- commands ---------------------------------------------------------------

def cmd_synth(cfg):
    model = fileio.load_body_model(cfg.path("body_model"))
    for sensor in cfg.sensors:
        sensor.check_against(model)
    poses_dir = _require_dir(cfg.path("poses"), "pose")
    pose_files = sorted(poses_dir.glob("*.pose"))
    if not pose_files:
        raise EmptyDataError(f"no .pose files under {poses_dir}")

    syn = cfg.synthesis
    shape_coeffs = syn.get("shape_coeffs")
    shape = Shape(shape_coeffs) if shape_coeffs is not None \
        else Shape.zeros(model.shape_coeff_count)
    noise_std = syn.get("noise_std")
    out_dir = cfg.path("imu")
    out_dir.mkdir(parents=True, exist_ok=True)

    for path in pose_files:
        seq = fileio.load_pose_sequence(
            path, repair_rotations=bool(syn.get("repair_rotations", False))
        )
        imu = synthesize_sequence(
            seq, model, shape, cfg.sensors,
            sensor_frame=bool(syn.get("sensor_frame", False)),
            add_gravity=bool(syn.get("add_gravity", False)),
        )
        if noise_std:
            imu = with_acceleration_noise(
                imu, float(noise_std), derive_seed(cfg.seed, f"noise:{path.stem}")
            )
        imu.meta["provenance"] = _provenance(cfg)
        target = out_dir / f"{path.stem}.imu"
        fileio.save_imu_sequence(target, imu)
        print(f"{target.name}: {seq.frame_count} -> {imu.frame_count} frames")
    return 0


def _empty_dataset(windows, cfg, stats):
    return WindowDataset(
        features=np.zeros((0, cfg.window_len, cfg.dims), dtype=np.float32),
        labels=np.zeros(0, dtype=np.int64),
        subjects=np.zeros(0, dtype=np.int64),
        label_map=cfg.label_map,
        window_len=cfg.window_len,
        dims=cfg.dims,
        stats=stats,
        seed=cfg.seed,
        provenance=_provenance(cfg),
    )


def _dataset_from(windows, cfg, stats):
    if not windows:
        return _empty_dataset(windows, cfg, stats)
    return WindowDataset.from_windows(
        windows, cfg.label_map, cfg.window_len, cfg.dims,
        stats=stats, seed=cfg.seed, provenance=_provenance(cfg),
    )


def cmd_preprocess(cfg):
    imu_dir = _require_dir(cfg.path("imu"), "IMU")
    imu_files = sorted(imu_dir.glob("*.imu"))
    if not imu_files:
        raise EmptyDataError(f"no .imu files under {imu_dir}")
    class_count = cfg.label_map.class_count

    sequences = []
    for path in imu_files:
        imu = fileio.load_imu_sequence(path)
        if "label" not in imu.meta:
            raise ConfigurationError(f"{path}: metadata carries no activity label")
        label = int(imu.meta["label"])
        if not 0 <= label < class_count:
            raise ValidationError(
                f"{path}: label {label} outside the {class_count}-class map"
            )
        sequences.append(LabeledSequence(
            imu=imu,
            label=label,
            subject=int(imu.meta.get("subject", 0)),
            source_tag=str(imu.meta.get("name", path.stem)),
        ))

    dataset_dir = cfg.path("dataset")
    dataset_dir.mkdir(parents=True, exist_ok=True)
    policy = cfg.filter_policy or FilterPolicy.wide_open(class_count)
    kept, report = apply_filter(sequences, policy)
    fileio.write_text(dataset_dir / "filter_report.tsv",
                      fileio.filter_report_tsv(report))
    print(f"filter: kept {len(kept)} of {len(sequences)} sequences")
    if not kept:
        raise EmptyDataError("acceleration filtering dropped every sequence")

    if cfg.upsample:
        factor_range = tuple(cfg.upsample.get("factor_range", (1.05, 1.25)))
        counts = {}
        for seq in kept:
            counts[seq.label] = counts.get(seq.label, 0) + 1
        if cfg.upsample.get("balance"):
            target = max(counts.values())
            targets = {label: target for label in counts}
        else:
            targets = {int(k): int(v) for k, v in
                       cfg.upsample.get("targets", {}).items()}
        for label in sorted(targets):
            if targets[label] > counts.get(label, 0):
                kept = upsample_class(
                    kept, label, targets[label],
                    derive_seed(cfg.seed, f"upsample:{label}"), factor_range,
                )
        print(f"upsample: {len(kept)} sequences after augmentation")

    windows = []
    for seq in kept:
        feats = assemble_features(seq.imu, cfg.sensor_order)
        windows.extend(segment_windows(
            feats, cfg.window_len, cfg.overlap, seq.label, seq.subject
        ))
    if not windows:
        raise EmptyDataError(
            f"no window fits: sequences shorter than {cfg.window_len} frames"
        )

    train_w, test_w = split(
        windows, cfg.split_fraction, derive_seed(cfg.seed, "split"),
        by_subject=cfg.split_by_subject,
    )
    stats = normalize_fit(train_w)
    train_ds = _dataset_from(normalize_apply(train_w, stats), cfg, stats)
    test_ds = _dataset_from(normalize_apply(test_w, stats), cfg, stats)
    fileio.save_window_dataset(dataset_dir / "train.windows", train_ds)
    fileio.save_window_dataset(dataset_dir / "test.windows", test_ds)
    print(f"windows: {len(train_ds)} train / {len(test_ds)} test "
          f"(window_len={cfg.window_len}, overlap={cfg.overlap}, dims={cfg.dims})")
    print("train class counts:", train_ds.class_counts().tolist())
    return 0


def _check_dataset_shape(ds, frames, dims, classes, context):
    if (ds.window_len, ds.dims, ds.label_map.class_count) != (frames, dims, classes):
        raise ConfigurationError(
            f"{context}: dataset is (window_len={ds.window_len}, dims={ds.dims}, "
            f"classes={ds.label_map.class_count}) but the network expects "
            f"(frames={frames}, dims={dims}, classes={classes})"
        )


def _train_config(cfg, stage_seed_tag, freeze=False, overrides=None,
                  default_epochs=50):
    t = dict(cfg.train)
    t.update(overrides or {})
    return TrainConfig(
        epochs=int(t.get("epochs", default_epochs)),
        seed=derive_seed(cfg.seed, stage_seed_tag),
        batch_size=int(t.get("batch_size", 64)),
        learning_rate=float(t.get("learning_rate", 1e-2)),
        momentum=float(t.get("momentum", 0.9)),
        freeze_encoder=freeze,
        val_fraction=float(t.get("val_fraction", 0.1)),
    )


def cmd_train(cfg):
    ds = fileio.load_window_dataset(cfg.path("dataset") / "train.windows")
    if len(ds) == 0:
        raise EmptyDataError("train.windows holds no windows")
    net_cfg = cfg.net
    _check_dataset_shape(ds, net_cfg.frames, net_cfg.dims, net_cfg.classes, "train")
    result = train(ds.features, ds.labels, net_cfg, _train_config(cfg, "train"))
    ckpt_dir = cfg.path("checkpoints")
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    last = result.trace[-1] if result.trace else None
    meta = {
        "stage": "train",
        "seed": cfg.seed,
        "best_epoch": result.best_epoch,
        "metrics": None if last is None else {
            "val_loss": last.val_loss, "val_accuracy": last.val_accuracy,
            "train_accuracy": last.train_accuracy,
        },
        "provenance": _provenance(cfg),
    }
    save_checkpoint(ckpt_dir / "model.ckpt", result.params, meta)
    fileio.write_text(ckpt_dir / "train_trace.tsv", trace_tsv(result.trace))
    if last:
        print(f"trained {last.epoch} epochs; best epoch {result.best_epoch}; "
              f"val_acc {last.val_accuracy:.3f}")
    print(f"checkpoint: {ckpt_dir / 'model.ckpt'}")
    return 0


def cmd_finetune(cfg, checkpoint_path, dataset_path):
    params, _ = load_checkpoint(Path(checkpoint_path))
    if dataset_path is None:
        key = "finetune_dataset" if "finetune_dataset" in cfg.paths else "dataset"
        dataset_path = cfg.path(key) / "train.windows"
    ds = fileio.load_window_dataset(Path(dataset_path))
    if len(ds) == 0:
        raise EmptyDataError(f"{dataset_path} holds no windows")
    pcfg = params.config
    _check_dataset_shape(ds, pcfg.frames, pcfg.dims, pcfg.classes, "finetune")
    # 20 epochs is the conventional budget for this stage, independent of the
    # train section; the finetune section can still override it
    tc = _train_config(cfg, "finetune", freeze=True,
                       overrides={"epochs": 20, **cfg.finetune})
    result = fine_tune(params, ds.features, ds.labels, tc)
    ckpt_dir = cfg.path("checkpoints")
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    last = result.trace[-1] if result.trace else None
    meta = {
        "stage": "finetune",
        "seed": cfg.seed,
        "best_epoch": result.best_epoch,
        "metrics": None if last is None else {
            "val_loss": last.val_loss, "val_accuracy": last.val_accuracy,
        },
        "provenance": _provenance(cfg),
    }
    save_checkpoint(ckpt_dir / "finetuned.ckpt", result.params, meta)
    fileio.write_text(ckpt_dir / "finetune_trace.tsv", trace_tsv(result.trace))
    print(f"fine-tuned (classifier only) for {tc.epochs} epochs; "
          f"checkpoint: {ckpt_dir / 'finetuned.ckpt'}")
    return 0


def cmd_eval(cfg, checkpoint_path, dataset_path):
    params, _ = load_checkpoint(Path(checkpoint_path))
    if dataset_path is None:
        dataset_path = cfg.path("dataset") / "test.windows"
    ds = fileio.load_window_dataset(Path(dataset_path))
    if len(ds) == 0:
        raise EmptyDataError(f"{dataset_path} holds no windows")
    pcfg = params.config
    _check_dataset_shape(ds, pcfg.frames, pcfg.dims, pcfg.classes, "eval")
    net = Network(params)
    preds, _ = net.predict(ds.features)
    cm = metrics.confusion(preds, ds.labels, pcfg.classes)
    report = metrics.metrics_report(cm, list(ds.label_map.names))
    report["dataset"] = Path(dataset_path).name
    report["provenance"] = _provenance(cfg)
    reports_dir = cfg.path("reports")
    reports_dir.mkdir(parents=True, exist_ok=True)
    fileio.write_json(reports_dir / "metrics.json", report)
    fileio.write_text(reports_dir / "confusion.tsv",
                      metrics.confusion_table(cm, list(ds.label_map.names)))
    metrics.render_heatmap(cm, reports_dir / "confusion.png",
                           list(ds.label_map.names))
    print(f"evaluated {cm.total} windows: "
          f"tn_inclusive_accuracy={report['tn_inclusive_accuracy']:.4f} "
          f"plain_accuracy={report['plain_accuracy']:.4f} "
          f"micro_f1={report['micro_f1']:.4f}")
    return 0


def cmd_report(cfg):
    reports_dir = cfg.path("reports")
    metrics_path = reports_dir / "metrics.json"
    with open(metrics_path, "r", encoding="utf-8") as f:
        report = json.load(f)
    lines = [
        f"windows evaluated: {report['total_windows']}",
        f"accuracy (TN-inclusive one-vs-rest): {report['tn_inclusive_accuracy']:.4f}",
        f"accuracy (plain, trace/total):       {report['plain_accuracy']:.4f}",
        f"micro-F1:                            {report['micro_f1']:.4f}",
        "",
        "class                     precision  recall  support",
    ]
    for row in report["per_class"]:
        lines.append(
            f"{row['name']:<25} {row['precision']:9.4f} {row['recall']:7.4f} "
            f"{row['support']:8d}"
        )
    fileio.write_text(reports_dir / "summary.txt", "\n".join(lines) + "\n")
    cm_path = reports_dir / "confusion.tsv"
    if cm_path.exists():
        rows = [line.split("\t") for line in
                cm_path.read_text(encoding="utf-8").strip().splitlines()]
        names = rows[0][1:]
        counts = np.array([[int(v) for v in row[1:]] for row in rows[1:]])
        metrics.render_heatmap(metrics.ConfusionMatrix(counts),
                               reports_dir / "confusion.png", names)
    print(f"report: {reports_dir / 'summary.txt'}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required "
                             "(synth, preprocess, train, finetune, eval, report)")
        cfg = _load_config(args)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "preprocess":
            return cmd_preprocess(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "finetune":
            return cmd_finetune(cfg, args.checkpoint, args.dataset)
        if args.command == "eval":
            return cmd_eval(cfg, args.checkpoint, args.dataset)
        return cmd_report(cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2
    except EmptyDataError as e:
        print(f"empty data: {e}", file=sys.stderr)
        return 3
    except (ConfigurationError, ValidationError, DivergenceError) as e:
        print(f"config/shape error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
