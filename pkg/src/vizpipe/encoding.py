"""Map cleaned attribute values into [0, 255] channel values.

Numeric attributes are min-max scaled to the byte range with training-time
bounds; categorical attributes become one-hot blocks materialized as
{0, 255} so every channel lives in the same RGB domain. Encoding is total
at inference time: out-of-range numerics clamp, unseen categories encode
as an all-zero block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from vizpipe.dataset import NUMERIC, AttributeSchema, Dataset, RawRecord
from vizpipe.errors import EmptyAfterCleaningError, SchemaMismatchError


@dataclass(frozen=True)
class NumericEncoding:
    min: float
    max: float

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError(f"min {self.min} > max {self.max}")


@dataclass(frozen=True)
class CategoricalEncoding:
    categories: tuple[str, ...]  # first-appearance order; unknown -> zero block

    def __post_init__(self):
        if not self.categories:
            raise ValueError("empty category set")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("duplicate categories")


@dataclass(frozen=True)
class EncoderModel:
    schema: AttributeSchema  # the cleaned schema this encoder was fitted on
    encodings: tuple[NumericEncoding | CategoricalEncoding, ...]

    @cached_property
    def expanded_channels(self) -> tuple[tuple[str, str, str | None], ...]:
        """Per channel: (attribute name, role, category); role is 'scalar' or 'onehot'."""
        channels: list[tuple[str, str, str | None]] = []
        for attr, enc in zip(self.schema.attributes, self.encodings):
            if isinstance(enc, NumericEncoding):
                channels.append((attr.name, "scalar", None))
            else:
                channels.extend((attr.name, "onehot", c) for c in enc.categories)
        return tuple(channels)

    @cached_property
    def channel_offsets(self) -> tuple[int, ...]:
        """Start index of each attribute's channel block."""
        offsets = []
        pos = 0
        for enc in self.encodings:
            offsets.append(pos)
            pos += 1 if isinstance(enc, NumericEncoding) else len(enc.categories)
        return tuple(offsets)

    @property
    def num_channels(self) -> int:
        return len(self.expanded_channels)


def fit_encoder(ds: Dataset) -> EncoderModel:
    """Fit numeric bounds and category vocabularies on a cleaned training split."""
    if not ds.records:
        raise EmptyAfterCleaningError("cannot fit an encoder on an empty dataset")
    encodings: list[NumericEncoding | CategoricalEncoding] = []
    for i, attr in enumerate(ds.schema.attributes):
        column = ds.column(i)
        if attr.kind == NUMERIC:
            encodings.append(NumericEncoding(float(min(column)), float(max(column))))
        else:
            seen: list[str] = []
            have = set()
            for c in column:
                if c not in have:
                    have.add(c)
                    seen.append(c)  # first-appearance order
            encodings.append(CategoricalEncoding(tuple(seen)))
    return EncoderModel(ds.schema, tuple(encodings))


def _round_half_away(t: float) -> float:
    return math.floor(t + 0.5) if t >= 0 else math.ceil(t - 0.5)


def encode_value(v: float, enc: NumericEncoding) -> int:
    """Scale one numeric value to [0, 255], rounding half away from zero.

    Total over all finite inputs: values clamp into [min, max] before
    scaling, the ratio is formed before multiplying by 255 (so it cannot
    overflow), and ranges wider than float64 fall back to halved endpoints
    (exact there, since such endpoints are far from subnormal).
    """
    if enc.min == enc.max:
        return 0
    clamped = min(max(v, enc.min), enc.max)
    width = enc.max - enc.min
    if math.isinf(width):
        ratio = (clamped * 0.5 - enc.min * 0.5) / (enc.max * 0.5 - enc.min * 0.5)
    else:
        ratio = (clamped - enc.min) / width
    return int(min(max(_round_half_away(255.0 * ratio), 0), 255))


def encode_record(r: RawRecord, m: EncoderModel) -> np.ndarray:
    """Encode one cleaned record into a uint8 channel vector."""
    if len(r.values) != m.schema.arity:
        raise SchemaMismatchError(
            f"record has {len(r.values)} cells, encoder expects {m.schema.arity}"
        )
    out = np.zeros(m.num_channels, dtype=np.uint8)
    for cell, enc, offset in zip(r.values, m.encodings, m.channel_offsets):
        if cell is None:
            raise SchemaMismatchError("record contains missing cells; clean it first")
        if isinstance(enc, NumericEncoding):
            out[offset] = encode_value(float(cell), enc)
        else:
            try:
                k = enc.categories.index(cell)
            except ValueError:
                continue  # unseen category -> all-zero block
            out[offset + k] = 255
    return out


def encode_dataset(ds: Dataset, m: EncoderModel) -> np.ndarray:
    """Encode every record; rows follow dataset order."""
    fitted = tuple((a.name, a.kind) for a in m.schema.attributes)
    actual = tuple((a.name, a.kind) for a in ds.schema.attributes)
    if fitted != actual:
        raise SchemaMismatchError(
            "dataset schema differs from the one the encoder was fitted on"
        )
    if not ds.records:
        return np.zeros((0, m.num_channels), dtype=np.uint8)
    return np.stack([encode_record(r, m) for r in ds.records])


def decode_channels(cv: np.ndarray, m: EncoderModel) -> tuple:
    """Approximate inverse of encode_record.

    Numerics return min + (v/255)(max-min); categoricals return the argmax
    category, or None for an all-zero block.
    """
    if len(cv) != m.num_channels:
        raise SchemaMismatchError(
            f"channel vector has {len(cv)} values, encoder expects {m.num_channels}"
        )
    cells = []
    for enc, offset in zip(m.encodings, m.channel_offsets):
        if isinstance(enc, NumericEncoding):
            v = float(cv[offset])
            width = enc.max - enc.min
            if math.isinf(width):
                step = (v / 255.0) * (enc.max * 0.5 - enc.min * 0.5)
                cells.append((enc.min + step) + step)  # partial sums stay finite
            else:
                cells.append(enc.min + (v / 255.0) * width)
        else:
            block = np.asarray(cv[offset : offset + len(enc.categories)])
            if int(block.max()) == 0:
                cells.append(None)
            else:
                cells.append(enc.categories[int(block.argmax())])
    return tuple(cells)
