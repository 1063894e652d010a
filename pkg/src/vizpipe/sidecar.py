"""Pipeline sidecar: the persisted bundle of fitted transforms.

A single JSON document freezes the parsed schema, cleaning model, encoder,
an audit copy of the correlation matrix, and the layout plan, protected by
a sha256 checksum. Floats are stored as decimal text: 17 significant
digits where exact replay matters (bounds, medians), 12 for the audit
matrix. Component consistency is validated on construction and on every
load.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vizpipe.cleaning import CleaningModel
from vizpipe.correlation import CorrelationMatrix
from vizpipe.dataset import Attribute, AttributeSchema
from vizpipe.encoding import CategoricalEncoding, EncoderModel, NumericEncoding
from vizpipe.errors import SidecarError
from vizpipe.layout import LayoutPlan

FORMAT_NAME = "vizpipe-sidecar"
FORMAT_VERSION = 1


def _f17(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class PipelineSidecar:
    schema: AttributeSchema
    cleaning: CleaningModel
    encoder: EncoderModel
    correlation: CorrelationMatrix
    layout: LayoutPlan

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        survivors = self.cleaning.kept_names
        enc_names = self.encoder.schema.attribute_names
        if survivors != enc_names:
            raise SidecarError(
                "cleaning survivors do not match encoder attributes: "
                f"{survivors} vs {enc_names}"
            )
        if tuple(sorted(self.layout.attribute_order)) != tuple(range(len(enc_names))):
            raise SidecarError("layout order is not a permutation of encoder attributes")
        if self.layout.num_channels != self.encoder.num_channels:
            raise SidecarError(
                f"layout covers {self.layout.num_channels} channels, "
                f"encoder produces {self.encoder.num_channels}"
            )
        if self.correlation.attribute_names != enc_names:
            raise SidecarError("correlation matrix names do not match encoder attributes")
        fitted = tuple(
            (a.name, a.kind) for a in self.schema.attributes
        )
        if fitted != self.cleaning.source_attributes:
            raise SidecarError("cleaning model was fitted against a different schema")


def _schema_to_dict(schema: AttributeSchema) -> dict:
    return {
        "attributes": [[a.name, a.kind, a.missing_marker] for a in schema.attributes],
        "class_attribute": schema.class_attribute,
        "class_labels": list(schema.class_labels),
    }


def _schema_from_dict(d: dict) -> AttributeSchema:
    return AttributeSchema(
        tuple(Attribute(n, k, m) for n, k, m in d["attributes"]),
        d["class_attribute"],
        tuple(d["class_labels"]),
    )


def _payload(s: PipelineSidecar) -> dict:
    imputations = {}
    for name, value in s.cleaning.imputations.items():
        if isinstance(value, float):
            imputations[name] = ["num", _f17(value)]
        else:
            imputations[name] = ["cat", value]
    encoders = []
    for attr, enc in zip(s.encoder.schema.attributes, s.encoder.encodings):
        if isinstance(enc, NumericEncoding):
            encoders.append(
                {"name": attr.name, "kind": "numeric", "min": _f17(enc.min), "max": _f17(enc.max)}
            )
        else:
            encoders.append(
                {"name": attr.name, "kind": "categorical", "categories": list(enc.categories)}
            )
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "schema": _schema_to_dict(s.schema),
        "cleaning": {
            "source_attributes": [list(t) for t in s.cleaning.source_attributes],
            "dropped_attributes": [list(t) for t in s.cleaning.dropped_attributes],
            "imputations": imputations,
            "max_missing_ratio_record": _f17(s.cleaning.max_missing_ratio_record),
        },
        "encoder": encoders,
        "correlation": {
            "names": list(s.correlation.attribute_names),
            "values": [
                [format(v, ".12g") for v in row] for row in s.correlation.values
            ],
        },
        "layout": {
            "attribute_order": list(s.layout.attribute_order),
            "grid": list(s.layout.grid_hw),
            "channel_slots": [list(t) for t in s.layout.channel_slots],
            "padding_slots": [list(t) for t in s.layout.padding_slots],
        },
    }


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_sidecar(s: PipelineSidecar, path: str | Path) -> None:
    payload = _payload(s)
    checksum = hashlib.sha256(_canonical(payload)).hexdigest()
    document = dict(payload)
    document["checksum"] = f"sha256:{checksum}"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_sidecar(path: str | Path) -> PipelineSidecar:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as e:
        raise SidecarError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise SidecarError(f"{path}: not a pipeline sidecar")
    if document.get("version") != FORMAT_VERSION:
        raise SidecarError(f"{path}: unsupported sidecar version {document.get('version')}")
    stored = document.pop("checksum", None)
    if stored != f"sha256:{hashlib.sha256(_canonical(document)).hexdigest()}":
        raise SidecarError(f"{path}: checksum mismatch; file corrupted or edited")

    try:
        schema = _schema_from_dict(document["schema"])
        cdoc = document["cleaning"]
        imputations: dict[str, float | str] = {}
        for name, (tag, value) in cdoc["imputations"].items():
            imputations[name] = float(value) if tag == "num" else value
        dropped = tuple((n, r) for n, r in cdoc["dropped_attributes"])
        source = tuple((n, k) for n, k in cdoc["source_attributes"])
        dropped_names = {n for n, _ in dropped}
        kept = tuple(a for a in schema.attributes if a.name not in dropped_names)
        output_schema = AttributeSchema(kept, schema.class_attribute, schema.class_labels)
        cleaning = CleaningModel(
            source_attributes=source,
            dropped_attributes=dropped,
            imputations=imputations,
            max_missing_ratio_record=float(cdoc["max_missing_ratio_record"]),
            output_schema=output_schema,
        )
        encodings = []
        if len(document["encoder"]) != len(output_schema.attributes):
            raise SidecarError(f"{path}: encoder entry count mismatch")
        for entry, attr in zip(document["encoder"], output_schema.attributes):
            if entry["name"] != attr.name:
                raise SidecarError(
                    f"{path}: encoder entry {entry['name']!r} out of order "
                    f"(expected {attr.name!r})"
                )
            if entry["kind"] == "numeric":
                encodings.append(NumericEncoding(float(entry["min"]), float(entry["max"])))
            else:
                encodings.append(CategoricalEncoding(tuple(entry["categories"])))
        encoder = EncoderModel(output_schema, tuple(encodings))
        corr_doc = document["correlation"]
        values = np.array(
            [[float(v) for v in row] for row in corr_doc["values"]], dtype=np.float64
        )
        correlation = CorrelationMatrix(tuple(corr_doc["names"]), values)
        ldoc = document["layout"]
        layout = LayoutPlan(
            attribute_order=tuple(ldoc["attribute_order"]),
            grid_hw=(ldoc["grid"][0], ldoc["grid"][1]),
            channel_slots=tuple((r, c, ch) for r, c, ch in ldoc["channel_slots"]),
            padding_slots=tuple((r, c, ch) for r, c, ch in ldoc["padding_slots"]),
        )
    except (KeyError, ValueError, TypeError) as e:
        raise SidecarError(f"{path}: malformed sidecar: {e}") from e
    return PipelineSidecar(schema, cleaning, encoder, correlation, layout)
