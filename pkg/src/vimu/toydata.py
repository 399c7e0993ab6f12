"""Generate a small self-contained demo workspace.

Writes the toy humanoid body-model file, a set of labeled pose sequences
(three scripted activities with per-subject variation), and a ready-to-run
pipeline config.  The CLI tests and the README quickstart both run the
full pipeline off this output:

    python -m vimu.toydata OUTDIR --seed 7
    vimu synth --config OUTDIR/config.json
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np

from .fileio import save_body_model, save_pose_sequence
from .rigs import HEAD, LEFT_ARM, PELVIS, RIGHT_LEG, toy_humanoid
from .rotations import rotation_about_axis
from .sensors import PoseSequence

ACTIVITIES = ("idle", "wave", "march")
X_AXIS = (1.0, 0.0, 0.0)
Y_AXIS = (0.0, 1.0, 0.0)
Z_AXIS = (0.0, 0.0, 1.0)


def _activity_pose_sequence(label, frames, frame_rate, rng, meta):
    """Scripted joint-angle curves per activity, jittered per call."""
    t = np.arange(frames) / frame_rate
    rotations = np.broadcast_to(np.eye(3), (frames, 4, 3, 3)).copy()
    translations = np.zeros((frames, 3))
    phase = rng.uniform(0, 2 * math.pi)
    rate_jitter = rng.uniform(0.9, 1.1)
    amp_jitter = rng.uniform(0.85, 1.15)

    if label == 0:  # idle: barely moving
        arm = 0.06 * amp_jitter * np.sin(2 * math.pi * 0.4 * rate_jitter * t + phase)
        for f in range(frames):
            rotations[f, LEFT_ARM] = rotation_about_axis(Z_AXIS, arm[f])
        translations[:, 2] = 0.003 * np.sin(2 * math.pi * 0.3 * t + phase)
    elif label == 1:  # wave: fast large arm swings
        arm = 1.0 * amp_jitter * np.sin(2 * math.pi * 2.0 * rate_jitter * t + phase)
        nod = 0.12 * np.sin(2 * math.pi * 1.0 * rate_jitter * t)
        for f in range(frames):
            rotations[f, LEFT_ARM] = rotation_about_axis(Y_AXIS, arm[f])
            rotations[f, HEAD] = rotation_about_axis(X_AXIS, nod[f])
    else:  # march: leg swings plus a root bounce
        leg = 0.7 * amp_jitter * np.sin(2 * math.pi * 1.3 * rate_jitter * t + phase)
        sway = 0.1 * np.sin(2 * math.pi * 1.3 * rate_jitter * t + phase)
        for f in range(frames):
            rotations[f, RIGHT_LEG] = rotation_about_axis(X_AXIS, leg[f])
            rotations[f, PELVIS] = rotation_about_axis(Z_AXIS, sway[f])
        translations[:, 2] = 0.03 * np.sin(2 * math.pi * 2.6 * rate_jitter * t)
        translations[:, 0] = 0.05 * t
    return PoseSequence(frame_rate, rotations, translations, meta=meta)


def default_config(workspace: Path, seed):
    return {
        "seed": seed,
        "paths": {
            "body_model": "body.model",
            "poses": "poses",
            "imu": "out/imu",
            "dataset": "out/dataset",
            "checkpoints": "out/checkpoints",
            "reports": "out/reports",
        },
        "sensors": [
            {"name": "left_wrist", "vertex_index": 8, "joint_index": LEFT_ARM},
            {"name": "right_thigh", "vertex_index": 11, "joint_index": RIGHT_LEG},
            {"name": "head", "vertex_index": 3, "joint_index": HEAD},
        ],
        "sensor_order": ["left_wrist", "right_thigh", "head"],
        "label_map": list(ACTIVITIES),
        "window": {"length": 60, "overlap": 0.5},
        "filter": None,
        "upsample": None,
        "split": {"train_fraction": 0.7, "by_subject": False},
        "synthesis": {"sensor_frame": False, "add_gravity": False, "noise_std": None},
        "net": {
            "frames": 60,
            "dims": 36,
            "classes": 3,
            "conv": [
                {"kernel": 6, "channels": 16, "stride": 2},
                {"kernel": 6, "channels": 32, "stride": 2},
            ],
            "fc": [64, 3],
            "penalty_weight": 0.25,
            "activation": "relu",
            "classifier_output": "softmax",
        },
        "train": {
            "epochs": 12,
            "batch_size": 32,
            "learning_rate": 0.01,
            "momentum": 0.9,
            "val_fraction": 0.15,
        },
        "finetune": {"epochs": 20},
    }


def write_workspace(outdir, seed=7, subjects=4, takes=2, frames=240,
                    frame_rate=60.0):
    """Create body.model, poses/*.pose and config.json under outdir."""
    outdir = Path(outdir)
    poses_dir = outdir / "poses"
    poses_dir.mkdir(parents=True, exist_ok=True)
    model, _ = toy_humanoid()
    save_body_model(outdir / "body.model", model, meta={"rig": "toy_humanoid"})

    rng = np.random.default_rng(seed)
    written = []
    for label, activity in enumerate(ACTIVITIES):
        for subject in range(subjects):
            for take in range(takes):
                name = f"{activity}_s{subject}_t{take}"
                meta = {"label": label, "subject": subject, "name": name}
                seq = _activity_pose_sequence(label, frames, frame_rate, rng, meta)
                path = poses_dir / f"{name}.pose"
                save_pose_sequence(path, seq)
                written.append(path)

    config = default_config(outdir, seed)
    with open(outdir / "config.json", "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2, sort_keys=True)
        f.write("\n")
    return written


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", help="workspace directory to create")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--subjects", type=int, default=4)
    ap.add_argument("--takes", type=int, default=2)
    ap.add_argument("--frames", type=int, default=240)
    args = ap.parse_args(argv)
    written = write_workspace(
        args.outdir, args.seed, args.subjects, args.takes, args.frames
    )
    print(f"wrote {len(written)} pose sequences under {args.outdir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
