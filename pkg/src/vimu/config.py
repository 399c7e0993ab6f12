"""Pipeline configuration: one JSON file, CLI flags win.

Two values are deliberately mandatory with no fallback: the master ``seed``
(config key or ``--seed``) and the reconstruction penalty weight
``net.penalty_weight`` — the two quantities most likely to silently change
results.  Relative paths are resolved against the config file's directory.
"""

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .net.network import NetworkConfig
from .pipeline import LABEL_MAP_PRESETS, ClassBands, FilterPolicy, LabelMap
from .sensors import SensorPlacement

OUTPUT_PATH_KEYS = ("imu", "dataset", "checkpoints", "reports")
INPUT_PATH_KEYS = ("body_model", "poses", "finetune_dataset")


def derive_seed(master_seed, tag):
    """Stable per-stage sub-seed from the master seed and a stage name."""
    return (int(master_seed) * 0x9E3779B1 + zlib.crc32(tag.encode())) % (2**63)


def _band(value):
    if value is None:
        return (None, None)
    lo, hi = value
    return (lo, hi)


def parse_label_map(raw) -> LabelMap:
    if isinstance(raw, str):
        if raw.startswith("preset:"):
            name = raw.split(":", 1)[1]
            try:
                return LABEL_MAP_PRESETS[name]
            except KeyError:
                raise ConfigurationError(
                    f"unknown label-map preset {name!r}; "
                    f"have {sorted(LABEL_MAP_PRESETS)}"
                ) from None
        raise ConfigurationError(f"bad label_map string {raw!r}")
    if raw and isinstance(raw[0], (list, tuple)):
        return LabelMap.from_pairs(raw)
    return LabelMap(tuple(raw))


def parse_filter_policy(raw, label_map: LabelMap):
    if raw is None:
        return None
    classes = raw.get("classes", {})
    bands = {}
    for key, spec in classes.items():
        if isinstance(key, str) and not key.lstrip("-").isdigit():
            if key not in label_map.names:
                raise ConfigurationError(
                    f"filter class {key!r} is not in the label map"
                )
            label = label_map.names.index(key)
        else:
            label = int(key)
        bands[label] = ClassBands(
            variance=_band(spec.get("variance")),
            peak_rate=_band(spec.get("peak_rate")),
            peak_height=float(spec.get("peak_height", 1.0)),
        )
    return FilterPolicy(
        bands=bands,
        min_peak_separation_s=float(raw.get("min_peak_separation_s", 0.25)),
    )


def parse_sensors(raw):
    sensors = []
    for item in raw:
        sensors.append(SensorPlacement(
            name=item["name"],
            vertex_index=int(item["vertex_index"]),
            joint_index=int(item["joint_index"]),
            local_rotation_offset=item.get("local_rotation_offset"),
        ))
    if not sensors:
        raise ConfigurationError("at least one sensor placement is required")
    return sensors


@dataclass
class PipelineConfig:
    seed: int
    paths: dict
    sensors: list
    sensor_order: list
    label_map: LabelMap
    window_len: int
    overlap: float
    filter_policy: FilterPolicy
    upsample: dict
    split_fraction: float
    split_by_subject: bool
    synthesis: dict
    net: NetworkConfig
    train: dict
    finetune: dict
    effective: dict = field(default_factory=dict)

    @property
    def dims(self):
        return 12 * len(self.sensor_order)

    def path(self, key) -> Path:
        try:
            return self.paths[key]
        except KeyError:
            raise ConfigurationError(f"config declares no path for {key!r}") from None


def apply_override(raw: dict, dotted_key: str, value):
    node = raw
    parts = dotted_key.split(".")
    for part in parts[:-1]:
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            node[part] = nxt
        node = nxt
    node[parts[-1]] = value


def parse_set_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_pipeline_config(path, seed_override=None, out_override=None,
                         sets=()) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")

    if out_override is not None:
        out_root = Path(out_override)
        raw_paths = dict(raw.get("paths", {}))
        for key in OUTPUT_PATH_KEYS:
            raw_paths[key] = str(out_root / key)
        raw["paths"] = raw_paths
    # --set is the most specific override, so it is applied last
    for dotted, value in sets:
        apply_override(raw, dotted, value)
    if seed_override is not None:
        raw["seed"] = int(seed_override)
    if "seed" not in raw:
        raise ConfigurationError(
            "seed is mandatory: set it in the config or pass --seed"
        )

    base = path.parent
    paths = {}
    for key, value in raw.get("paths", {}).items():
        p = Path(value)
        paths[key] = p if p.is_absolute() else base / p

    label_map = parse_label_map(raw.get("label_map", []))
    sensors = parse_sensors(raw.get("sensors", []))
    sensor_order = list(raw.get("sensor_order", [s.name for s in sensors]))
    known = {s.name for s in sensors}
    for name in sensor_order:
        if name not in known:
            raise ConfigurationError(
                f"sensor_order names unknown sensor {name!r}; have {sorted(known)}"
            )

    window = raw.get("window", {})
    net_raw = raw.get("net")
    if not net_raw:
        raise ConfigurationError("config must declare a net section")
    if "penalty_weight" not in net_raw:
        raise ConfigurationError(
            "net.penalty_weight is mandatory: the reconstruction penalty has "
            "no hidden default"
        )
    try:
        net = NetworkConfig.from_dict(net_raw)
    except TypeError as e:
        raise ConfigurationError(f"bad net section: {e}") from None

    split = raw.get("split", {})
    return PipelineConfig(
        seed=int(raw["seed"]),
        paths=paths,
        sensors=sensors,
        sensor_order=sensor_order,
        label_map=label_map,
        window_len=int(window.get("length", 60)),
        overlap=float(window.get("overlap", 0.5)),
        filter_policy=parse_filter_policy(raw.get("filter"), label_map),
        upsample=raw.get("upsample") or None,
        split_fraction=float(split.get("train_fraction", 0.7)),
        split_by_subject=bool(split.get("by_subject", False)),
        synthesis=dict(raw.get("synthesis", {})),
        net=net,
        train=dict(raw.get("train", {})),
        finetune=dict(raw.get("finetune", {})),
        effective=raw,
    )
