"""Dataset cleaning: drop unusable attributes and records, impute the rest.

Attribute drops are decided first (missing ratio, then constant check),
record drops second (missing ratio over surviving attributes), and
imputation runs last, so the whole step is deterministic. Statistics are
fitted once and can be replayed on other splits so test data is always
cleaned with training-time medians and modes.
"""

from __future__ import annotations

from dataclasses import dataclass

from vizpipe.dataset import (
    NUMERIC,
    Attribute,
    AttributeSchema,
    Dataset,
    RawRecord,
)
from vizpipe.errors import EmptyAfterCleaningError, SchemaMismatchError


@dataclass(frozen=True)
class CleaningPolicy:
    max_missing_ratio_attribute: float = 0.6
    max_missing_ratio_record: float = 0.5
    drop_constant_attributes: bool = True
    numeric_imputation: str = "median"
    categorical_imputation: str = "mode"

    def __post_init__(self):
        for name in ("max_missing_ratio_attribute", "max_missing_ratio_record"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.numeric_imputation != "median":
            raise ValueError("only median imputation is supported for numeric attributes")
        if self.categorical_imputation != "mode":
            raise ValueError("only mode imputation is supported for categorical attributes")


@dataclass(frozen=True)
class CleaningReport:
    dropped_attributes: tuple[tuple[str, str], ...]  # (name, reason)
    dropped_records: int
    dropped_record_reasons: dict[str, int]
    imputed_cells: dict[str, int]  # attribute name -> count, nonzero entries only


@dataclass(frozen=True)
class CleaningModel:
    """Frozen cleaning decisions: drops plus per-attribute imputation values."""

    source_attributes: tuple[tuple[str, str], ...]  # (name, kind) fitted against
    dropped_attributes: tuple[tuple[str, str], ...]
    imputations: dict[str, float | str]  # surviving attribute -> fill value
    max_missing_ratio_record: float
    output_schema: AttributeSchema

    @property
    def kept_names(self) -> tuple[str, ...]:
        return self.output_schema.attribute_names


def _median(values: list[float]) -> float:
    # midpoint convention for even counts
    s = sorted(values)
    n = len(s)
    if n % 2 == 1:
        return s[n // 2]
    return (s[n // 2 - 1] + s[n // 2]) / 2.0


def _mode(values: list[str]) -> str:
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    # ties broken by lexicographically smallest category
    return min(v for v, c in counts.items() if c == best)


def fit_cleaning(ds: Dataset, policy: CleaningPolicy) -> CleaningModel:
    """Decide attribute drops and imputation values from one (training) split."""
    if not ds.records:
        raise EmptyAfterCleaningError("cannot fit cleaning on an empty dataset")

    n_records = len(ds.records)
    dropped: list[tuple[str, str]] = []
    kept: list[Attribute] = []
    imputations: dict[str, float | str] = {}

    for idx, attr in enumerate(ds.schema.attributes):
        column = ds.column(idx)
        observed = [c for c in column if c is not None]
        missing_ratio = (n_records - len(observed)) / n_records
        if missing_ratio > policy.max_missing_ratio_attribute:
            dropped.append((attr.name, "missing_ratio"))
            continue
        distinct = set(observed)
        if policy.drop_constant_attributes and len(distinct) <= 1:
            dropped.append((attr.name, "constant"))
            continue
        if not observed:
            # survived the thresholds but has nothing to impute from
            dropped.append((attr.name, "no_observed_values"))
            continue
        kept.append(attr)
        if attr.kind == NUMERIC:
            imputations[attr.name] = _median(observed)  # type: ignore[arg-type]
        else:
            imputations[attr.name] = _mode(observed)  # type: ignore[arg-type]

    if not kept:
        raise EmptyAfterCleaningError("all attributes were dropped")

    output_schema = AttributeSchema(
        tuple(kept), ds.schema.class_attribute, ds.schema.class_labels
    )
    return CleaningModel(
        source_attributes=tuple((a.name, a.kind) for a in ds.schema.attributes),
        dropped_attributes=tuple(dropped),
        imputations=imputations,
        max_missing_ratio_record=policy.max_missing_ratio_record,
        output_schema=output_schema,
    )


def _apply(ds: Dataset, m: CleaningModel) -> tuple[Dataset, CleaningReport]:
    source = tuple((a.name, a.kind) for a in ds.schema.attributes)
    if source != m.source_attributes:
        raise SchemaMismatchError(
            "dataset schema differs from the one the cleaning model was fitted on"
        )

    kept_names = set(m.kept_names)
    kept_idx = [i for i, a in enumerate(ds.schema.attributes) if a.name in kept_names]
    n_kept = len(kept_idx)
    kept_attrs = [ds.schema.attributes[i] for i in kept_idx]

    records: list[RawRecord] = []
    dropped_records = 0
    imputed: dict[str, int] = {}
    for r in ds.records:
        cells = [r.values[i] for i in kept_idx]
        n_missing = sum(1 for c in cells if c is None)
        if n_missing / n_kept > m.max_missing_ratio_record:
            dropped_records += 1
            continue
        if n_missing:
            for j, attr in enumerate(kept_attrs):
                if cells[j] is None:
                    cells[j] = m.imputations[attr.name]
                    imputed[attr.name] = imputed.get(attr.name, 0) + 1
        records.append(RawRecord(tuple(cells), r.label))

    if not records and ds.records:
        raise EmptyAfterCleaningError("all records were dropped")

    report = CleaningReport(
        dropped_attributes=m.dropped_attributes,
        dropped_records=dropped_records,
        dropped_record_reasons={"missing_ratio": dropped_records} if dropped_records else {},
        imputed_cells=imputed,
    )
    return Dataset(m.output_schema, tuple(records)), report


def apply_cleaning(ds: Dataset, m: CleaningModel) -> Dataset:
    """Replay fitted drops and imputations on another split."""
    return _apply(ds, m)[0]


def clean(ds: Dataset, policy: CleaningPolicy) -> tuple[Dataset, CleaningReport]:
    """Fit on ``ds`` and apply to it; the output contains no missing cells."""
    model = fit_cleaning(ds, policy)
    return _apply(ds, model)
