"""Binary file formats: one JSON header line followed by raw data blocks.

Every persisted artifact (body model, pose sequence, IMU sequence, window
dataset, checkpoint) shares the same framing: a single UTF-8 JSON line
(sorted keys, no whitespace) that declares the blocks (name, dtype,
shape) in order, then the blocks' raw bytes back to back.  Floats are
little-endian float32, ints little-endian int32, so files are byte-stable
across runs given identical content.
"""

import json

import numpy as np

from .errors import ConfigurationError
from .kinematics import BodyModel
from .rotations import polar_project, validate_rotations
from .sensors import IMUSequence, PoseSequence

F4 = "<f4"
I4 = "<i4"
_ALLOWED_DTYPES = (F4, I4)


def dump_header(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def write_block_file(path, header: dict, blocks):
    """blocks: list of (name, array); dtypes are cast to f4/i4."""
    header = dict(header)
    casted = []
    specs = []
    names = set()
    for name, arr in blocks:
        if name in names:
            raise ConfigurationError(f"duplicate block name {name!r}")
        names.add(name)
        arr = np.asarray(arr)
        dtype = I4 if np.issubdtype(arr.dtype, np.integer) else F4
        arr = np.ascontiguousarray(arr.astype(dtype))
        casted.append(arr)
        specs.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
    header["blocks"] = specs
    with open(path, "wb") as f:
        f.write(dump_header(header))
        for arr in casted:
            f.write(arr.tobytes())


def read_block_file(path):
    """Returns (header, {name: array}, {name: (start, end) byte range})."""
    with open(path, "rb") as f:
        line = f.readline()
        try:
            header = json.loads(line)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path}: bad header line: {e}") from None
        arrays = {}
        ranges = {}
        offset = len(line)
        for spec in header.get("blocks", []):
            dtype = spec["dtype"]
            if dtype not in _ALLOWED_DTYPES:
                raise ConfigurationError(f"{path}: unsupported dtype {dtype!r}")
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = f.read(count * 4)
            if len(raw) != count * 4:
                raise ConfigurationError(
                    f"{path}: truncated block {spec['name']!r}"
                )
            arrays[spec["name"]] = np.frombuffer(raw, dtype=dtype).reshape(shape)
            ranges[spec["name"]] = (offset, offset + len(raw))
            offset += len(raw)
    return header, arrays, ranges


def _expect_format(header, path, expected):
    if header.get("format") != expected:
        raise ConfigurationError(
            f"{path}: expected format {expected!r}, got {header.get('format')!r}"
        )


# ---- body model -----------------------------------------------------------

def save_body_model(path, model: BodyModel, meta=None):
    header = {
        "format": "vimu.bodymodel",
        "version": 1,
        "n": model.vertex_count,
        "k": model.joint_count - 1,
        "b": model.shape_coeff_count,
        "p": model.pose_feature_count,
        "parent": [int(v) for v in model.parent],
        "meta": meta or {},
    }
    write_block_file(path, header, [
        ("template_vertices", model.template_vertices),
        ("rest_joint_positions", model.rest_joint_positions),
        ("blend_weights", model.blend_weights),
        ("shape_basis", model.shape_basis),
        ("pose_basis", model.pose_basis),
    ])


def load_body_model(path) -> BodyModel:
    header, arrays, _ = read_block_file(path)
    _expect_format(header, path, "vimu.bodymodel")
    return BodyModel(
        template_vertices=arrays["template_vertices"],
        parent=np.asarray(header["parent"], dtype=np.int64),
        rest_joint_positions=arrays["rest_joint_positions"],
        blend_weights=arrays["blend_weights"],
        shape_basis=arrays["shape_basis"],
        pose_basis=arrays["pose_basis"],
    )


# ---- pose sequence --------------------------------------------------------

def save_pose_sequence(path, seq: PoseSequence):
    frames = seq.frame_count
    k1 = seq.joint_count
    flat = np.concatenate(
        [seq.joint_rotations.reshape(frames, k1 * 9), seq.root_translations], axis=1
    )
    header = {
        "format": "vimu.poses",
        "version": 1,
        "frame_rate": seq.frame_rate,
        "frame_count": frames,
        "k": k1 - 1,
        "meta": seq.meta,
    }
    write_block_file(path, header, [("frames", flat)])


def load_pose_sequence(path, repair_rotations=False) -> PoseSequence:
    header, arrays, _ = read_block_file(path)
    _expect_format(header, path, "vimu.poses")
    k1 = int(header["k"]) + 1
    frames = int(header["frame_count"])
    flat = arrays["frames"].astype(np.float64)
    if flat.shape != (frames, k1 * 9 + 3):
        raise ConfigurationError(
            f"{path}: frames block shape {flat.shape} does not match header "
            f"(expected ({frames}, {k1 * 9 + 3}))"
        )
    rot = flat[:, : k1 * 9].reshape(frames, k1, 3, 3)
    if repair_rotations:
        rot = polar_project(rot)
    else:
        validate_rotations(rot, 1e-4, f"{path} pose")
    return PoseSequence(
        frame_rate=float(header["frame_rate"]),
        joint_rotations=rot,
        root_translations=flat[:, k1 * 9 :],
        meta=header.get("meta", {}),
    )


# ---- IMU sequence ---------------------------------------------------------

def save_imu_sequence(path, seq: IMUSequence):
    frames = seq.frame_count
    header = {
        "format": "vimu.imu",
        "version": 1,
        "frame_rate": seq.frame_rate,
        "frame_count": frames,
        "sensors": list(seq.sensor_names),
        "meta": seq.meta,
    }
    blocks = []
    for i, name in enumerate(seq.sensor_names):
        rows = np.concatenate(
            [seq.orientations[i].reshape(frames, 9), seq.accelerations[i]], axis=1
        )
        blocks.append((f"sensor/{name}", rows))
    write_block_file(path, header, blocks)


def load_imu_sequence(path) -> IMUSequence:
    header, arrays, _ = read_block_file(path)
    _expect_format(header, path, "vimu.imu")
    names = tuple(header["sensors"])
    frames = int(header["frame_count"])
    ori = np.empty((len(names), frames, 3, 3))
    acc = np.empty((len(names), frames, 3))
    for i, name in enumerate(names):
        rows = arrays[f"sensor/{name}"].astype(np.float64)
        if rows.shape != (frames, 12):
            raise ConfigurationError(
                f"{path}: sensor {name!r} block shape {rows.shape} "
                f"(expected ({frames}, 12))"
            )
        ori[i] = rows[:, :9].reshape(frames, 3, 3)
        acc[i] = rows[:, 9:]
    return IMUSequence(
        frame_rate=float(header["frame_rate"]),
        sensor_names=names,
        orientations=ori,
        accelerations=acc,
        meta=header.get("meta", {}),
    )


# ---- window dataset -------------------------------------------------------

def save_window_dataset(path, dataset):
    """Record-wise layout: per window float32 features, int32 label, int32
    subject (the header carries everything needed to slice them back)."""
    from .pipeline import WindowDataset  # local: pipeline imports sensors

    assert isinstance(dataset, WindowDataset)
    header = {
        "format": "vimu.windows",
        "version": 1,
        "class_count": dataset.label_map.class_count,
        "label_map": list(dataset.label_map.names),
        "window_len": dataset.window_len,
        "dims": dataset.dims,
        "count": len(dataset),
        "normalization": None if dataset.stats is None else {
            "mean": [float(v) for v in dataset.stats.mean],
            "std": [float(v) for v in dataset.stats.std],
        },
        "seed": dataset.seed,
        "provenance": dataset.provenance,
    }
    with open(path, "wb") as f:
        f.write(dump_header(header))
        for i in range(len(dataset)):
            f.write(dataset.features[i].astype(F4).tobytes())
            f.write(np.int32(dataset.labels[i]).tobytes())
            f.write(np.int32(dataset.subjects[i]).tobytes())


def load_window_dataset(path):
    from .pipeline import LabelMap, NormStats, WindowDataset

    with open(path, "rb") as f:
        line = f.readline()
        try:
            header = json.loads(line)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path}: bad header line: {e}") from None
        _expect_format(header, path, "vimu.windows")
        count = int(header["count"])
        length = int(header["window_len"])
        dims = int(header["dims"])
        record = np.dtype([
            ("features", F4, (length, dims)),
            ("label", I4),
            ("subject", I4),
        ])
        raw = f.read(count * record.itemsize)
        if len(raw) != count * record.itemsize:
            raise ConfigurationError(f"{path}: truncated window records")
        records = np.frombuffer(raw, dtype=record)
    norm = header.get("normalization")
    stats = None if norm is None else NormStats(norm["mean"], norm["std"])
    return WindowDataset(
        features=records["features"].copy(),
        labels=records["label"].astype(np.int64),
        subjects=records["subject"].astype(np.int64),
        label_map=LabelMap(tuple(header["label_map"])),
        window_len=length,
        dims=dims,
        stats=stats,
        seed=header.get("seed"),
        provenance=header.get("provenance", {}),
    )


# ---- plain-text tables ----------------------------------------------------

def filter_report_tsv(report) -> str:
    lines = ["source_tag\tlabel\tdecision\tsensor\tstatistic\tvalue\tband_lo\tband_hi"]
    for r in report.records:
        if r.keep:
            lines.append(f"{r.source_tag}\t{r.label}\tkeep\t\t\t\t\t")
        else:
            lines.append(
                f"{r.source_tag}\t{r.label}\tdrop\t{r.sensor}\t{r.statistic}"
                f"\t{r.value!r}\t{r.band[0]!r}\t{r.band[1]!r}"
            )
    return "\n".join(lines) + "\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")
