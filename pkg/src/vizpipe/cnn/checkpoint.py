"""Binary model checkpoints.

Layout (all integers little-endian):
  magic "VZPCKPT1" | u32 config-JSON length | config JSON (canonical)
  | u32 input H | u32 input W | u32 epochs_run | f64 final_loss (NaN if none)
  | u32 loss-history length | f64 per epoch
  | u32 tensor count | per tensor: u16 name length, name utf8,
    u8 ndim, u32 dims..., float64 data

Writing is fully deterministic, so equal seeds give byte-identical files.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from vizpipe.cnn.model import CnnConfig, CnnModel, init_model
from vizpipe.errors import ArchiveError

MAGIC = b"VZPCKPT1"


def _tensor_items(model: CnnModel) -> list[tuple[str, np.ndarray]]:
    items = []
    for i, p in enumerate(model.conv_params):
        items.append((f"conv{i}.w", p["w"]))
        items.append((f"conv{i}.b", p["b"]))
    for i, p in enumerate(model.dense_params):
        items.append((f"dense{i}.w", p["w"]))
        items.append((f"dense{i}.b", p["b"]))
    return items


def save_checkpoint(model: CnnModel, path: str | Path) -> None:
    config_json = json.dumps(
        model.config.to_dict(), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", len(config_json)), config_json]
    parts.append(struct.pack("<II", *model.input_hw))
    final = model.final_loss if model.final_loss is not None else math.nan
    parts.append(struct.pack("<Id", model.epochs_run, final))
    parts.append(struct.pack("<I", len(model.loss_history)))
    for v in model.loss_history:
        parts.append(struct.pack("<d", v))
    tensors = _tensor_items(model)
    parts.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", arr.ndim))
        for dim in arr.shape:
            parts.append(struct.pack("<I", dim))
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ArchiveError("truncated checkpoint file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: str | Path) -> CnnModel:
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(len(MAGIC)) != MAGIC:
        raise ArchiveError(f"{path}: not a checkpoint file")
    (cfg_len,) = r.unpack("<I")
    try:
        config = CnnConfig.from_dict(json.loads(r.take(cfg_len).decode("utf-8")))
    except (ValueError, KeyError, TypeError) as e:
        raise ArchiveError(f"{path}: bad config block: {e}") from e
    h, w = r.unpack("<II")
    epochs_run, final_loss = r.unpack("<Id")
    (hist_len,) = r.unpack("<I")
    history = tuple(r.unpack("<d")[0] for _ in range(hist_len))
    (n_tensors,) = r.unpack("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = tuple(r.unpack("<I")[0] for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(r.take(count * 8), dtype="<f8").reshape(shape).copy()
        tensors[name] = arr
    if r.pos != len(r.data):
        raise ArchiveError(f"{path}: trailing bytes after checkpoint payload")

    model = init_model(config, (h, w))  # establishes expected shapes
    for i, p in enumerate(model.conv_params):
        p["w"], p["b"] = _expect(tensors, f"conv{i}.w", p["w"].shape), _expect(
            tensors, f"conv{i}.b", p["b"].shape
        )
    for i, p in enumerate(model.dense_params):
        p["w"], p["b"] = _expect(tensors, f"dense{i}.w", p["w"].shape), _expect(
            tensors, f"dense{i}.b", p["b"].shape
        )
    model.epochs_run = epochs_run
    model.loss_history = history
    if not math.isnan(final_loss) and history and history[-1] != final_loss:
        raise ArchiveError(f"{path}: final loss does not match loss history")
    return model


def _expect(tensors: dict[str, np.ndarray], name: str, shape: tuple) -> np.ndarray:
    if name not in tensors:
        raise ArchiveError(f"missing tensor {name!r} in checkpoint")
    arr = tensors[name]
    if arr.shape != shape:
        raise ArchiveError(
            f"tensor {name!r} has shape {arr.shape}, expected {shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ArchiveError(f"tensor {name!r} contains non-finite values")
    return arr
