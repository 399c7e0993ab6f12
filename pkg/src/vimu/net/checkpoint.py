"""Versioned checkpoint files: JSON header + named float32 tensor blocks.

Tensors are written in the canonical ``named_tensors`` order, so the byte
range of any group (e.g. encoder + decoder) is stable and can be compared
directly across files; the freeze-invariance tests rely on that.
"""

import numpy as np

from ..errors import ConfigurationError
from ..fileio import read_block_file, write_block_file
from .network import LayerParams, NetworkConfig, NetworkParams

FORMAT = "vimu.checkpoint"
VERSION = 1


def save_checkpoint(path, params: NetworkParams, meta=None):
    header = {
        "format": FORMAT,
        "version": VERSION,
        "config": params.config.to_dict(),
        "meta": meta or {},
    }
    write_block_file(path, header, params.named_tensors())


def load_checkpoint(path):
    """Returns (NetworkParams with float32 tensors, meta dict)."""
    header, arrays, _ = read_block_file(path)
    if header.get("format") != FORMAT:
        raise ConfigurationError(
            f"{path}: expected format {FORMAT!r}, got {header.get('format')!r}"
        )
    config = NetworkConfig.from_dict(header["config"])
    groups = {"encoder": [], "classifier": [], "decoder": []}
    pending = {}
    # blocks arrive in canonical order: weight then bias per layer
    for name, arr in arrays.items():
        group, layer, attr = name.split(".")
        arr = arr.astype(np.float32)  # always copies: training mutates in place
        if attr == "weight":
            pending[(group, layer)] = arr
        else:
            weight = pending.pop((group, layer), None)
            if weight is None:
                raise ConfigurationError(f"{path}: bias {name!r} without weight")
            groups[group].append(LayerParams(weight, arr))
    if pending:
        raise ConfigurationError(f"{path}: weights without biases: {sorted(pending)}")
    params = NetworkParams(
        config, groups["encoder"], groups["classifier"], groups["decoder"]
    )
    return params, header.get("meta", {})


def group_byte_ranges(path, group_prefixes=("encoder.", "decoder.")):
    """Concatenated raw bytes of every tensor whose name starts with one of
    the prefixes, in canonical block order."""
    _, _, ranges = read_block_file(path)
    with open(path, "rb") as f:
        data = f.read()
    chunks = [
        data[start:end]
        for name, (start, end) in ranges.items()
        if name.startswith(tuple(group_prefixes))
    ]
    return b"".join(chunks)
