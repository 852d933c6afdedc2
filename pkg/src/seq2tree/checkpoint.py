"""Versioned binary checkpoints: JSON header plus raw parameter arrays.

Layout:

    magic line      b"SEQ2TREE-CKPT v1\\n"
    header length   8-byte little-endian unsigned integer
    header          UTF-8 JSON (see below)
    arrays          raw float64, little-endian, C order, concatenated in
                    the order the header lists them

The header records the format version, hyperparameters, the training seed,
the design-decision flags (attention feedback routing variant, dropout
rate, init scale), and a name/shape entry per array.  Round trips are
bit-exact.
"""

import json

import numpy as np

from .model import FEEDBACK_VARIANT, Hyper, ModelParams, init_params

MAGIC = b"SEQ2TREE-CKPT v1\n"

FORMAT_VERSION = 1

_DTYPE = np.dtype("<f8")


def save_checkpoint(path, params, seed=None, extra=None):
    """Write params (and metadata) to path."""
    names = []
    arrays = []
    for name, arr in params.param_items():
        names.append({"name": name, "shape": list(arr.shape)})
        arrays.append(np.ascontiguousarray(arr, dtype=_DTYPE))
    header = {
        "format_version": FORMAT_VERSION,
        "hyper": params.hyper.to_dict(),
        "seed": seed,
        "flags": {
            "attention_feedback": FEEDBACK_VARIANT,
            "dropout": params.hyper.dropout,
            "init_scale": params.hyper.init_scale,
        },
        "arrays": names,
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        for arr in arrays:
            fh.write(arr.tobytes(order="C"))


def load_checkpoint(path):
    """Read a checkpoint; returns (params, header_dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic)")
        header_len = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(
                f"{path}: unsupported checkpoint format version "
                f"{header.get('format_version')!r}")
        hyper = Hyper.from_dict(header["hyper"])
        params = init_params(hyper, seed=0)
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            n_bytes = int(np.prod(shape)) * _DTYPE.itemsize
            raw = fh.read(n_bytes)
            if len(raw) != n_bytes:
                raise ValueError(
                    f"{path}: truncated array {entry['name']!r}")
            arr = np.frombuffer(raw, dtype=_DTYPE).reshape(shape)
            params.set_param(entry["name"], arr.astype(np.float64))
        trailing = fh.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing bytes after arrays")
    variant = header.get("flags", {}).get("attention_feedback")
    if variant != FEEDBACK_VARIANT:
        raise ValueError(
            f"{path}: checkpoint uses feedback variant {variant!r}, this "
            f"build implements {FEEDBACK_VARIANT!r}")
    return params, header
