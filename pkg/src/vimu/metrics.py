"""Confusion matrices and the one-vs-rest aggregated accuracy and F1.

Two accuracy conventions are surfaced side by side:

- ``accuracy``: the TN-inclusive one-vs-rest form
  (sum TP + sum TN) / (sum TP + sum TN + sum FP + sum FN),
  which exceeds plain accuracy for more than two classes;
- ``plain_accuracy``: trace / total.

Micro-F1 is 2*sum TP / (2*sum TP + sum FP + sum FN); because every row sum
and column sum of a confusion matrix adds up to the same grand total,
sum FP == sum FN and micro-F1 collapses to trace/total exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[t][p]: windows of true class t predicted as class p."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValidationError(f"counts must be square, got {counts.shape}")
        if np.any(counts < 0):
            raise ValidationError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def class_count(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    def merged_with(self, other):
        if other.class_count != self.class_count:
            raise ValidationError("cannot merge matrices of different sizes")
        return ConfusionMatrix(self.counts + other.counts)


def confusion(preds, truths, class_count) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    truths = np.asarray(truths, dtype=np.int64).reshape(-1)
    if preds.shape != truths.shape:
        raise ValidationError(
            f"preds ({preds.shape[0]}) and truths ({truths.shape[0]}) differ in length"
        )
    for name, arr in (("preds", preds), ("truths", truths)):
        if arr.size and (arr.min() < 0 or arr.max() >= class_count):
            raise ValidationError(
                f"{name} contain labels outside [0, {class_count})"
            )
    counts = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(counts, (truths, preds), 1)
    return ConfusionMatrix(counts)


def one_vs_rest_counts(cm: ConfusionMatrix):
    """Per-class (TP, FP, TN, FN) arrays read off the matrix."""
    counts = cm.counts
    total = counts.sum()
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    tn = total - tp - fp - fn
    return tp, fp, tn, fn


def _require_nonempty(cm):
    if cm.total == 0:
        raise ValidationError("metric undefined on an empty confusion matrix")


def accuracy(cm: ConfusionMatrix) -> float:
    """TN-inclusive one-vs-rest accuracy."""
    _require_nonempty(cm)
    tp, fp, tn, fn = one_vs_rest_counts(cm)
    num = tp.sum() + tn.sum()
    return float(num / (num + fp.sum() + fn.sum()))


def plain_accuracy(cm: ConfusionMatrix) -> float:
    """Fraction of correctly classified windows (trace / total)."""
    _require_nonempty(cm)
    return float(np.trace(cm.counts) / cm.total)


def f1_micro(cm: ConfusionMatrix) -> float:
    """Micro-averaged F1 over one-vs-rest counts."""
    _require_nonempty(cm)
    tp, fp, _, fn = one_vs_rest_counts(cm)
    denom = 2 * tp.sum() + fp.sum() + fn.sum()
    if denom == 0:
        raise ValidationError("micro-F1 undefined: no positives anywhere")
    return float(2 * tp.sum() / denom)


def per_class_precision_recall(cm: ConfusionMatrix):
    """(precision, recall, support) arrays; empty denominators yield 0."""
    tp, fp, _, fn = one_vs_rest_counts(cm)
    with np.errstate(invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        recall = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
    support = cm.counts.sum(axis=1)
    return precision, recall, support


def metrics_report(cm: ConfusionMatrix, label_names=None) -> dict:
    """All metrics in one JSON-ready dict."""
    _require_nonempty(cm)
    precision, recall, support = per_class_precision_recall(cm)
    if label_names is None:
        label_names = [str(i) for i in range(cm.class_count)]
    return {
        "class_count": cm.class_count,
        "total_windows": cm.total,
        "tn_inclusive_accuracy": accuracy(cm),
        "plain_accuracy": plain_accuracy(cm),
        "micro_f1": f1_micro(cm),
        "per_class": [
            {
                "id": i,
                "name": label_names[i],
                "precision": float(precision[i]),
                "recall": float(recall[i]),
                "support": int(support[i]),
            }
            for i in range(cm.class_count)
        ],
    }


def confusion_table(cm: ConfusionMatrix, label_names=None) -> str:
    """Tab-delimited matrix, rows = true class, columns = predicted."""
    if label_names is None:
        label_names = [str(i) for i in range(cm.class_count)]
    lines = ["true\\pred\t" + "\t".join(label_names)]
    for i in range(cm.class_count):
        row = "\t".join(str(int(v)) for v in cm.counts[i])
        lines.append(f"{label_names[i]}\t{row}")
    return "\n".join(lines) + "\n"


def render_heatmap(cm: ConfusionMatrix, path, label_names=None):
    """Grayscale confusion heatmap with per-cell counts, written as PNG."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    if label_names is None:
        label_names = [str(i) for i in range(cm.class_count)]
    counts = cm.counts
    fig, ax = plt.subplots(figsize=(1.0 + 0.7 * cm.class_count,) * 2)
    ax.imshow(counts, cmap="gray_r", interpolation="nearest")
    ax.set_xticks(range(cm.class_count), label_names, rotation=45, ha="right")
    ax.set_yticks(range(cm.class_count), label_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    vmax = counts.max() if counts.max() > 0 else 1
    for i in range(cm.class_count):
        for j in range(cm.class_count):
            color = "white" if counts[i, j] > 0.5 * vmax else "black"
            ax.text(j, i, str(int(counts[i, j])), ha="center", va="center",
                    color=color, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
