"""Mini-batch SGD training, FC-only fine-tuning, and inference helpers.

Everything is seeded and single-threaded: the same (seed, config, data)
yields bit-identical parameters.  The returned parameters are the best by
validation loss (earliest epoch wins ties).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, EmptyDataError, ValidationError
from .network import Gradients, LossBreakdown, Network, NetworkParams, init_params


def round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    seed: int
    batch_size: int = 64
    learning_rate: float = 1e-2
    momentum: float = 0.9
    freeze_encoder: bool = False
    penalty_weight: float = None  # None: use the network config's value
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ValidationError(
                f"learning_rate must be >= 0, got {self.learning_rate}"
            )
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if not 0 <= self.val_fraction < 1:
            raise ValidationError(
                f"val_fraction must be in [0,1), got {self.val_fraction}"
            )


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    class_loss: float
    recon_loss: float
    total_loss: float
    train_accuracy: float
    val_accuracy: float
    val_loss: float


@dataclass
class TrainResult:
    params: NetworkParams  # best by validation loss
    trace: list = field(default_factory=list)
    best_epoch: int = 0


def one_hot(labels, classes):
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ValidationError(f"labels must lie in [0, {classes})")
    out = np.zeros((labels.size, classes), dtype=np.float32)
    out[np.arange(labels.size), labels] = 1.0
    return out


def predict(params: NetworkParams, windows):
    """Labels and squashed scores for one window (frames x dims) or a batch."""
    net = Network(params)
    arr = np.asarray(windows)
    single = arr.ndim == 2
    labels, scores = net.predict(arr)
    if single:
        return int(labels[0]), scores[0]
    return labels, scores


def evaluate(params: NetworkParams, features, labels, penalty_weight=None,
             batch_size=512):
    """(mean joint loss, accuracy) over a dataset, computed in fixed-size
    batches so results do not depend on dataset size."""
    net = Network(params)
    n = features.shape[0]
    if n == 0:
        raise EmptyDataError("cannot evaluate on an empty dataset")
    onehot = one_hot(labels, params.config.classes)
    total = class_sum = recon_sum = 0.0
    correct = 0
    for start in range(0, n, batch_size):
        xb = features[start : start + batch_size]
        zb = onehot[start : start + batch_size]
        lb = net.joint_loss(xb, zb, penalty_weight)
        w = xb.shape[0]
        total += lb.total * w
        class_sum += lb.class_loss * w
        recon_sum += lb.recon_loss * w
        preds, _ = net.predict(xb)
        correct += int((preds == np.asarray(labels)[start : start + batch_size]).sum())
    return LossBreakdown(total / n, class_sum / n, recon_sum / n), correct / n


def _sgd_step(params, grads: Gradients, velocity, lr, momentum, trainable):
    for (group_name, p_group), (_, g_group) in zip(params.groups(), grads.groups()):
        if group_name not in trainable:
            continue
        for i, (p, g) in enumerate(zip(p_group, g_group)):
            for attr in ("weight", "bias"):
                key = f"{group_name}.{i}.{attr}"
                v = velocity[key]
                np.multiply(v, momentum, out=v)
                v -= lr * getattr(g, attr)
                getattr(p, attr)[...] += v


def train(features, labels, net_config, train_config: TrainConfig,
          val=None, initial_params=None) -> TrainResult:
    """Mini-batch gradient descent with momentum on the joint loss.

    ``features``: (n, frames, dims) float32; ``labels``: (n,) ints.
    ``val``: optional (features, labels) tuple; when absent, a seeded
    ``val_fraction`` slice of the training data is held out (the training
    set doubles as validation if the fraction rounds to zero).
    """
    features = np.ascontiguousarray(features, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    n = features.shape[0]
    if n == 0:
        raise EmptyDataError("training dataset is empty")
    if features.ndim != 3 or features.shape[1:] != (net_config.frames, net_config.dims):
        raise ValidationError(
            f"features shape {features.shape} does not match network input "
            f"(n, {net_config.frames}, {net_config.dims})"
        )
    if labels.shape[0] != n:
        raise ValidationError("features and labels differ in length")

    rng = np.random.default_rng(train_config.seed)
    if initial_params is None:
        params = init_params(net_config, rng)
    else:
        if initial_params.config.frames != net_config.frames or \
           initial_params.config.dims != net_config.dims:
            raise ValidationError(
                "initial parameters expect input "
                f"({initial_params.config.frames}, {initial_params.config.dims}), "
                f"dataset provides ({net_config.frames}, {net_config.dims})"
            )
        params = initial_params.copy()

    if val is None and train_config.val_fraction > 0:
        n_val = round_half_up(train_config.val_fraction * n)
        if 0 < n_val < n:
            perm = rng.permutation(n)
            val_idx = np.sort(perm[:n_val])
            train_idx = np.sort(perm[n_val:])
            val = (features[val_idx], labels[val_idx])
            features, labels = features[train_idx], labels[train_idx]
            n = features.shape[0]
    if val is None:
        val = (features, labels)

    onehot = one_hot(labels, net_config.classes)
    trainable = ("classifier",) if train_config.freeze_encoder else (
        "encoder", "classifier", "decoder"
    )
    velocity = {
        f"{g}.{i}.{attr}": np.zeros_like(getattr(lp, attr))
        for g, group in params.groups() if g in trainable
        for i, lp in enumerate(group)
        for attr in ("weight", "bias")
    }

    net = Network(params)
    lam = train_config.penalty_weight
    best_params = params.copy()
    best_epoch = 0
    best_val = math.inf
    trace = []
    bs = train_config.batch_size
    for epoch in range(1, train_config.epochs + 1):
        order = rng.permutation(n)
        class_sum = recon_sum = total_sum = 0.0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            grads, lb = net.backward(
                features[idx], onehot[idx], lam,
                classifier_only=train_config.freeze_encoder,
            )
            if not math.isfinite(lb.total):
                raise DivergenceError(
                    f"loss became non-finite at epoch {epoch} "
                    f"(learning rate {train_config.learning_rate:g})"
                )
            _sgd_step(params, grads, velocity, train_config.learning_rate,
                      train_config.momentum, trainable)
            w = idx.size
            class_sum += lb.class_loss * w
            recon_sum += lb.recon_loss * w
            total_sum += lb.total * w
        _, train_acc = evaluate(params, features, labels, lam)
        val_lb, val_acc = evaluate(params, val[0], val[1], lam)
        trace.append(EpochStats(
            epoch, class_sum / n, recon_sum / n, total_sum / n,
            train_acc, val_acc, val_lb.total,
        ))
        if val_lb.total < best_val:
            best_val = val_lb.total
            best_epoch = epoch
            best_params = params.copy()
    return TrainResult(best_params, trace, best_epoch)


def fine_tune(params: NetworkParams, features, labels,
              train_config: TrainConfig, val=None) -> TrainResult:
    """Update only the classifier head; encoder and decoder stay bit-identical.

    The epoch budget is whatever ``train_config.epochs`` says; 20 is the
    conventional budget for this stage.
    """
    if not train_config.freeze_encoder:
        raise ValidationError("fine_tune requires freeze_encoder=True")
    features = np.asarray(features)
    if features.ndim != 3 or features.shape[1:] != (
        params.config.frames, params.config.dims
    ):
        raise ValidationError(
            f"fine-tune features shape {features.shape} does not match the "
            f"pretrained input (n, {params.config.frames}, {params.config.dims})"
        )
    return train(features, labels, params.config, train_config,
                 val=val, initial_params=params)


def trace_tsv(trace) -> str:
    """Epoch trace as a tab-delimited table."""
    lines = ["epoch\tclass_loss\trecon_loss\ttotal_loss\ttrain_acc\tval_acc\tval_loss"]
    for s in trace:
        lines.append(
            f"{s.epoch}\t{s.class_loss!r}\t{s.recon_loss!r}\t{s.total_loss!r}"
            f"\t{s.train_accuracy!r}\t{s.val_accuracy!r}\t{s.val_loss!r}"
        )
    return "\n".join(lines) + "\n"
