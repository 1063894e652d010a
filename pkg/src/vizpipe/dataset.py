"""Schema-driven CSV ingestion.

A schema config declares the feature columns (name, kind, missing marker)
and a final class declaration; CSV rows are parsed into typed records
where every cell is a float, a string, or None for a missing value.
The class column is the last CSV column; rows without it load unlabeled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from vizpipe.errors import (
    ArityError,
    LabelError,
    SchemaError,
    UnlabeledError,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# One parsed cell: float for numeric, str for categorical, None for missing.
Cell = float | str | None


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str
    missing_marker: str = "?"


@dataclass(frozen=True)
class AttributeSchema:
    """Feature attributes in CSV column order plus the class declaration."""

    attributes: tuple[Attribute, ...]
    class_attribute: str
    class_labels: tuple[str, ...]

    def __post_init__(self):
        if not self.attributes:
            raise SchemaError("schema declares no feature attributes")
        names = [a.name for a in self.attributes]
        seen = set()
        for n in names:
            if n in seen:
                raise SchemaError(f"duplicate attribute name: {n!r}")
            seen.add(n)
        for a in self.attributes:
            if a.kind not in (NUMERIC, CATEGORICAL):
                raise SchemaError(f"attribute {a.name!r} has unknown kind {a.kind!r}")
        if self.class_attribute in seen:
            raise SchemaError(
                f"class attribute {self.class_attribute!r} collides with a feature attribute"
            )
        if not self.class_labels:
            raise SchemaError("class_labels must be non-empty")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise SchemaError("class_labels must be unique")

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @property
    def arity(self) -> int:
        return len(self.attributes)

    def label_index(self, label: str) -> int:
        try:
            return self.class_labels.index(label)
        except ValueError:
            raise LabelError(f"unknown class label {label!r}") from None


@dataclass(frozen=True)
class RawRecord:
    """One parsed row: feature cells in schema order, optional label index."""

    values: tuple[Cell, ...]
    label: int | None = None


@dataclass(frozen=True)
class Dataset:
    schema: AttributeSchema
    records: tuple[RawRecord, ...]
    # numeric cells that failed to parse (and became missing), per attribute
    parse_failures: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for r in self.records:
            if len(r.values) != self.schema.arity:
                raise ArityError(
                    f"record has {len(r.values)} cells, schema arity is {self.schema.arity}"
                )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def class_counts(self) -> dict[str, int]:
        counts = {label: 0 for label in self.schema.class_labels}
        for r in self.records:
            if r.label is not None:
                counts[self.schema.class_labels[r.label]] += 1
        return counts

    def column(self, index: int) -> list[Cell]:
        return [r.values[index] for r in self.records]


def parse_schema(config_text: str) -> AttributeSchema:
    """Parse the line-oriented schema config.

    One attribute per line: ``<name>,<numeric|categorical>[,missing=<marker>]``.
    The final non-blank line declares the class column:
    ``class,<name>,<label1>|<label2>|...``. Blank lines are ignored.
    """
    lines = [
        (i + 1, line.strip())
        for i, line in enumerate(config_text.splitlines())
        if line.strip()
    ]
    if not lines:
        raise SchemaError("empty schema config")

    last_no, last = lines[-1]
    class_fields = last.split(",")
    if class_fields[0] != "class" or len(class_fields) != 3:
        raise SchemaError(
            f"line {last_no}: last line must be 'class,<name>,<label1>|<label2>|...'"
        )
    class_name = class_fields[1].strip()
    if not class_name:
        raise SchemaError(f"line {last_no}: empty class attribute name")
    labels = tuple(p.strip() for p in class_fields[2].split("|"))
    if any(not lbl for lbl in labels):
        raise SchemaError(f"line {last_no}: empty class label")

    attributes = []
    for line_no, line in lines[:-1]:
        fields = line.split(",")
        if len(fields) not in (2, 3):
            raise SchemaError(
                f"line {line_no}: expected '<name>,<kind>[,missing=<marker>]'"
            )
        name = fields[0].strip()
        kind = fields[1].strip()
        if not name:
            raise SchemaError(f"line {line_no}: empty attribute name")
        if kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"line {line_no}: unknown kind {kind!r}")
        marker = "?"
        if len(fields) == 3:
            opt = fields[2].strip()
            if not opt.startswith("missing="):
                raise SchemaError(f"line {line_no}: unknown option {opt!r}")
            marker = opt[len("missing=") :]
        attributes.append(Attribute(name, kind, marker))

    try:
        return AttributeSchema(tuple(attributes), class_name, labels)
    except SchemaError as e:
        raise SchemaError(f"schema config: {e}") from None


def _parse_cell(raw: str, attr: Attribute, failures: dict[str, int]) -> Cell:
    stripped = raw.strip()
    if stripped == attr.missing_marker:
        return None
    if attr.kind == NUMERIC:
        try:
            v = float(stripped)
        except ValueError:
            failures[attr.name] = failures.get(attr.name, 0) + 1
            return None
        if not math.isfinite(v):
            failures[attr.name] = failures.get(attr.name, 0) + 1
            return None
        return v
    return raw  # categorical cells are preserved verbatim


def load_csv(path: str | Path, schema: AttributeSchema, header: bool = False) -> Dataset:
    """Load an RFC-4180-style CSV against the schema.

    Rows may have ``arity`` cells (unlabeled) or ``arity + 1`` cells with the
    class label last. Cells equal to an attribute's missing marker, and
    numeric cells that fail to parse to a finite value, load as missing.
    """
    n = schema.arity
    records: list[RawRecord] = []
    failures: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if header and reader.line_num == 1:
                continue
            if len(row) == n:
                label = None
            elif len(row) == n + 1:
                raw_label = row[n].strip()
                try:
                    label = schema.class_labels.index(raw_label)
                except ValueError:
                    raise LabelError(
                        f"line {reader.line_num}: unknown class label {raw_label!r}"
                    ) from None
            else:
                raise ArityError(
                    f"line {reader.line_num}: expected {n} or {n + 1} cells, got {len(row)}"
                )
            values = tuple(
                _parse_cell(row[i], schema.attributes[i], failures) for i in range(n)
            )
            records.append(RawRecord(values, label))
    return Dataset(schema, tuple(records), failures)


def save_csv(ds: Dataset, path: str | Path) -> None:
    """Write a dataset back to CSV; missing cells become the attribute's marker."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for r in ds.records:
            row = []
            for attr, cell in zip(ds.schema.attributes, r.values):
                if cell is None:
                    row.append(attr.missing_marker)
                elif isinstance(cell, float):
                    row.append(repr(cell))
                else:
                    row.append(cell)
            if r.label is not None:
                row.append(ds.schema.class_labels[r.label])
            writer.writerow(row)


def class_histogram(ds: Dataset) -> dict[str, int]:
    """Per-class record counts; every record must carry a label."""
    counts = {label: 0 for label in ds.schema.class_labels}
    for i, r in enumerate(ds.records):
        if r.label is None:
            raise UnlabeledError(f"record {i} has no class label")
        counts[ds.schema.class_labels[r.label]] += 1
    return counts
