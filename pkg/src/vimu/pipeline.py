"""Turn labeled IMU sequences into a windowed, normalized training set.

Stage order used by the CLI: acceleration-statistics filtering, optional
interpolation up-sampling (sequence level, before any windowing so near
duplicates cannot straddle the split), sliding-window segmentation with
feature assembly, stratified split, then z-score normalization fitted on
the training split only.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import find_peaks

from .errors import ConfigurationError, EmptyDataError, ValidationError
from .rotations import polar_project
from .sensors import IMUSequence

log = logging.getLogger(__name__)

FEATURES_PER_SENSOR = 12  # 3 acceleration + 9 orientation entries
STD_FLOOR = 1e-8
DEFAULT_PEAK_SEPARATION_S = 0.25


def round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class LabelMap:
    """Contiguous activity ids with unique names."""

    names: tuple

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        if len(set(names)) != len(names):
            raise ConfigurationError("label names must be unique")
        if not names:
            raise ConfigurationError("label map must not be empty")
        object.__setattr__(self, "names", names)

    @property
    def class_count(self):
        return len(self.names)

    def name_of(self, label):
        return self.names[label]

    @classmethod
    def from_pairs(cls, pairs):
        pairs = sorted((int(i), str(n)) for i, n in pairs)
        ids = [i for i, _ in pairs]
        if ids != list(range(len(ids))):
            raise ConfigurationError(f"label ids must be contiguous from 0, got {ids}")
        return cls(tuple(n for _, n in pairs))


# Five target-domain activities; the 12-class list is an illustrative
# preset (real category lists arrive via config).
PRESET_5_CLASS = LabelMap(
    ("computer works", "walking", "jumping", "stretching arms", "stretching legs")
)
PRESET_12_CLASS = LabelMap(
    (
        "walking", "running", "jumping", "sitting", "standing", "lying",
        "cleaning", "stretching", "waving", "clapping", "climbing stairs",
        "cycling",
    )
)
LABEL_MAP_PRESETS = {"5class": PRESET_5_CLASS, "12class": PRESET_12_CLASS}


@dataclass(frozen=True)
class LabeledSequence:
    """An IMU sequence with its activity label and subject id."""

    imu: IMUSequence
    label: int
    subject: int
    source_tag: str = ""

    def __post_init__(self):
        if self.label < 0:
            raise ValidationError(f"label must be >= 0, got {self.label}")


@dataclass(frozen=True)
class Window:
    """One classification sample: (frames x dims) features plus its label."""

    features: np.ndarray
    label: int
    subject: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float32)
        if feats.ndim != 2:
            raise ValidationError(f"window features must be 2-D, got {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise ValidationError("window features must be finite")
        object.__setattr__(self, "features", feats)


def assemble_features(imu: IMUSequence, sensor_order) -> np.ndarray:
    """Concatenate per-sensor features per frame: 3 accel then 9 row-major
    orientation values, sensors in the given order."""
    blocks = []
    for name in sensor_order:
        idx = imu.sensor_index(name)
        acc = imu.accelerations[idx]
        ori = imu.orientations[idx].reshape(imu.frame_count, 9)
        blocks.append(acc)
        blocks.append(ori)
    return np.concatenate(blocks, axis=1)


def window_stride(window_len, overlap):
    if not 0 <= overlap < 1:
        raise ValidationError(f"overlap must be in [0, 1), got {overlap}")
    if window_len < 1:
        raise ValidationError(f"window_len must be >= 1, got {window_len}")
    return max(1, round_half_up(window_len * (1.0 - overlap)))


def segment_windows(seq, window_len, overlap, label=0, subject=0):
    """Slice a (frames x dims) feature matrix into overlapping windows.

    Windows start at 0, stride, 2*stride, ... while they fit; trailing
    partial frames are discarded.  Short sequences yield an empty list.
    """
    seq = np.asarray(seq)
    stride = window_stride(window_len, overlap)
    frames = seq.shape[0]
    out = []
    start = 0
    while start + window_len <= frames:
        out.append(Window(seq[start : start + window_len], label, subject))
        start += stride
    return out


@dataclass(frozen=True)
class ClassBands:
    """Inclusive accept bands for one activity class."""

    variance: tuple = (-math.inf, math.inf)
    peak_rate: tuple = (-math.inf, math.inf)
    peak_height: float = 1.0

    def __post_init__(self):
        for name in ("variance", "peak_rate"):
            lo, hi = getattr(self, name)
            lo = -math.inf if lo is None else float(lo)
            hi = math.inf if hi is None else float(hi)
            if lo > hi:
                raise ConfigurationError(f"{name} band has lo > hi: ({lo}, {hi})")
            object.__setattr__(self, name, (lo, hi))


@dataclass(frozen=True)
class FilterPolicy:
    """Per-class statistic bands plus the shared peak-detector settings."""

    bands: dict  # class id -> ClassBands
    min_peak_separation_s: float = DEFAULT_PEAK_SEPARATION_S

    def bands_for(self, label):
        try:
            return self.bands[label]
        except KeyError:
            raise ConfigurationError(
                f"filter policy has no bands for class {label}"
            ) from None

    @classmethod
    def wide_open(cls, class_count):
        return cls({c: ClassBands() for c in range(class_count)})


@dataclass(frozen=True)
class FilterRecord:
    source_tag: str
    label: int
    keep: bool
    sensor: str = ""
    statistic: str = ""
    value: float = math.nan
    band: tuple = (math.nan, math.nan)


@dataclass
class FilterReport:
    """One record per input sequence, in input order."""

    records: list = field(default_factory=list)

    def append(self, record):
        self.records.append(record)

    def kept(self):
        return sum(1 for r in self.records if r.keep)


def acceleration_statistics(imu: IMUSequence, sensor, peak_height,
                            min_separation_s=DEFAULT_PEAK_SEPARATION_S):
    """(variance, peak rate in Hz) of the acceleration magnitude of one sensor."""
    mag = np.linalg.norm(imu.acceleration(sensor), axis=1)
    variance = float(np.var(mag))
    distance = max(1, round_half_up(min_separation_s * imu.frame_rate))
    peaks, _ = find_peaks(mag, height=peak_height, distance=distance)
    duration = imu.frame_count / imu.frame_rate
    return variance, len(peaks) / duration


def filter_by_acceleration(seq: LabeledSequence, policy: FilterPolicy):
    """Keep/drop one sequence; the report records the first violated band."""
    bands = policy.bands_for(seq.label)
    for sensor in seq.imu.sensor_names:
        variance, peak_rate = acceleration_statistics(
            seq.imu, sensor, bands.peak_height, policy.min_peak_separation_s
        )
        for stat_name, value, band in (
            ("variance", variance, bands.variance),
            ("peak_rate", peak_rate, bands.peak_rate),
        ):
            if not band[0] <= value <= band[1]:
                return False, FilterRecord(
                    seq.source_tag, seq.label, False, sensor, stat_name, value, band
                )
    return True, FilterRecord(seq.source_tag, seq.label, True)


def apply_filter(sequences, policy: FilterPolicy):
    """Filter a batch of sequences; returns (kept, FilterReport)."""
    report = FilterReport()
    kept = []
    for seq in sequences:
        keep, record = filter_by_acceleration(seq, policy)
        report.append(record)
        if keep:
            kept.append(seq)
    return kept, report


def resample_sequence(seq: LabeledSequence, factor, tag) -> LabeledSequence:
    """Linear time-domain resampling of one labeled sequence.

    Accelerations are interpolated componentwise; orientations are
    interpolated componentwise then projected back onto SO(3).  The nominal
    frame rate is kept, so the motion plays back at a different speed.
    """
    imu = seq.imu
    frames = imu.frame_count
    if frames < 2:
        raise ValidationError("cannot resample a sequence with < 2 frames")
    new_frames = max(2, round_half_up(frames * factor))
    t_old = np.arange(frames, dtype=np.float64)
    t_new = np.linspace(0.0, frames - 1.0, new_frames)

    def interp_cols(a2d):
        return np.stack([np.interp(t_new, t_old, a2d[:, c]) for c in range(a2d.shape[1])], axis=1)

    s_count = len(imu.sensor_names)
    acc = np.stack([interp_cols(imu.accelerations[s]) for s in range(s_count)])
    ori = np.stack(
        [interp_cols(imu.orientations[s].reshape(frames, 9)) for s in range(s_count)]
    ).reshape(s_count, new_frames, 3, 3)
    ori = polar_project(ori)
    resampled = IMUSequence(
        frame_rate=imu.frame_rate,
        sensor_names=imu.sensor_names,
        orientations=ori,
        accelerations=acc,
        meta=dict(imu.meta),
    )
    return replace(seq, imu=resampled, source_tag=tag)


def upsample_class(sequences, class_id, target_count, seed,
                   factor_range=(1.05, 1.25)):
    """Grow one class to target_count by resampled copies of its sequences.

    Originals are never modified; new sequences are appended.  Deterministic
    for a fixed seed.
    """
    sequences = list(sequences)
    members = [i for i, s in enumerate(sequences) if s.label == class_id]
    if not members:
        raise ValidationError(f"class {class_id} has no sequences to up-sample")
    current = len(members)
    if target_count < current:
        raise ValidationError(
            f"target_count {target_count} below current count {current} "
            f"for class {class_id}"
        )
    rng = np.random.default_rng(seed)
    for i in range(target_count - current):
        src = sequences[members[int(rng.integers(len(members)))]]
        factor = float(rng.uniform(*factor_range))
        tag = f"{src.source_tag}#up{class_id}.{i}"
        sequences.append(resample_sequence(src, factor, tag))
    return sequences


@dataclass(frozen=True)
class NormStats:
    """Per-feature-dimension mean and std (std floored at 1e-8)."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=np.float64))


def normalize_fit(windows) -> NormStats:
    """Fit z-score stats over all frames of the given (training) windows."""
    if not windows:
        raise EmptyDataError("cannot fit normalization on an empty window list")
    stacked = np.concatenate([w.features for w in windows], axis=0).astype(np.float64)
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), STD_FLOOR)
    return NormStats(mean, std)


def normalize_apply(windows, stats: NormStats):
    """Standardize windows with previously fitted stats."""
    return [
        replace(w, features=((w.features - stats.mean) / stats.std).astype(np.float32))
        for w in windows
    ]


@dataclass
class WindowDataset:
    """Stacked windows ready for training plus everything needed to
    reproduce them (label map, normalization stats, seed, provenance)."""

    features: np.ndarray  # (n, window_len, dims) float32
    labels: np.ndarray  # (n,)
    subjects: np.ndarray  # (n,)
    label_map: LabelMap
    window_len: int
    dims: int
    stats: NormStats = None
    seed: int = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        self.subjects = np.asarray(self.subjects, dtype=np.int64).reshape(-1)
        n = self.features.shape[0]
        if self.features.ndim != 3 or self.features.shape[1:] != (self.window_len, self.dims):
            raise ValidationError(
                f"features shape {self.features.shape} does not match "
                f"(n, {self.window_len}, {self.dims})"
            )
        if self.labels.shape[0] != n or self.subjects.shape[0] != n:
            raise ValidationError("labels/subjects length must match feature count")
        if self.labels.size and self.labels.max() >= self.label_map.class_count:
            raise ValidationError(
                f"label {self.labels.max()} outside the {self.label_map.class_count}-class map"
            )

    def __len__(self):
        return self.features.shape[0]

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.label_map.class_count)

    @classmethod
    def from_windows(cls, windows, label_map, window_len, dims, stats=None,
                     seed=None, provenance=None):
        if not windows:
            raise EmptyDataError("no windows to assemble into a dataset")
        return cls(
            features=np.stack([w.features for w in windows]),
            labels=np.array([w.label for w in windows]),
            subjects=np.array([w.subject for w in windows]),
            label_map=label_map,
            window_len=window_len,
            dims=dims,
            stats=stats,
            seed=seed,
            provenance=provenance or {},
        )


def split(windows, train_fraction=0.7, seed=0, by_subject=False):
    """Deterministic train/test split of a window list.

    Default is stratified per label (shuffle with the seed, cut at
    round(train_fraction * count)).  ``by_subject`` instead keeps each
    subject wholly on one side.
    """
    windows = list(windows)
    if not windows:
        raise EmptyDataError("cannot split an empty window list")
    if not 0 < train_fraction < 1:
        raise ValidationError(f"train_fraction must be in (0,1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx = []
    test_idx = []
    if by_subject:
        subjects = sorted({w.subject for w in windows})
        order = rng.permutation(len(subjects))
        target = round_half_up(train_fraction * len(windows))
        train_subjects = set()
        taken = 0
        for pos in order:
            if taken >= target:
                break
            s = subjects[pos]
            train_subjects.add(s)
            taken += sum(1 for w in windows if w.subject == s)
        if len(train_subjects) == len(subjects):
            log.warning("subject split put every subject in train; test is empty")
        for i, w in enumerate(windows):
            (train_idx if w.subject in train_subjects else test_idx).append(i)
    else:
        labels = sorted({w.label for w in windows})
        for label in labels:
            members = [i for i, w in enumerate(windows) if w.label == label]
            if len(members) < 2:
                log.warning(
                    "class %d has %d window(s); sending all of it to train",
                    label, len(members),
                )
                train_idx.extend(members)
                continue
            order = rng.permutation(len(members))
            cut = round_half_up(train_fraction * len(members))
            train_idx.extend(members[i] for i in order[:cut])
            test_idx.extend(members[i] for i in order[cut:])
    train_idx.sort()
    test_idx.sort()
    return [windows[i] for i in train_idx], [windows[i] for i in test_idx]
