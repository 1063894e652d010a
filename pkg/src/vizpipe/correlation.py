"""Pairwise association strengths over mixed-type attributes, on one [0,1] scale.

numeric-numeric   -> |Pearson r|
categorical pairs -> Cramer's V
mixed pairs       -> correlation ratio (eta)

Degenerate columns (zero variance, single category) score 0 so the
downstream ordering objective stays total.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from vizpipe.dataset import NUMERIC, Dataset
from vizpipe.errors import LengthMismatchError, VizpipeError


@dataclass(eq=False, frozen=True)
class CorrelationMatrix:
    attribute_names: tuple[str, ...]
    values: np.ndarray  # (n, n) float64, symmetric, unit diagonal

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.attribute_names)


def _check_lengths(x, y) -> None:
    if len(x) != len(y):
        raise LengthMismatchError(f"column lengths differ: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise LengthMismatchError("need at least 2 paired observations")


def pearson_abs(x, y) -> float:
    """Absolute Pearson correlation; 0 if either column has zero variance."""
    _check_lengths(x, y)
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        return 0.0
    r = float((dx * dy).sum()) / (sx * sy)
    return min(abs(r), 1.0)


def cramers_v(a, b) -> float:
    """Cramer's V from the contingency table; 0 if either side has one category."""
    _check_lengths(a, b)
    ai, r = _factorize(a)
    bi, c = _factorize(b)
    if r < 2 or c < 2:
        return 0.0
    table = np.zeros((r, c), dtype=np.float64)
    np.add.at(table, (ai, bi), 1.0)
    n = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n
    chi2 = float(((table - expected) ** 2 / expected).sum())
    v = np.sqrt(chi2 / (n * min(r - 1, c - 1)))
    return min(float(v), 1.0)


def correlation_ratio(cat, num) -> float:
    """eta = sqrt(between-group variance / total variance); 0 if total is 0."""
    _check_lengths(cat, num)
    ci, k = _factorize(cat)
    ya = np.asarray(num, dtype=np.float64)
    grand = ya.mean()
    ss_total = float(((ya - grand) ** 2).sum())
    if ss_total == 0.0:
        return 0.0
    counts = np.bincount(ci, minlength=k).astype(np.float64)
    sums = np.bincount(ci, weights=ya, minlength=k)
    means = sums / counts
    ss_between = float((counts * (means - grand) ** 2).sum())
    return min(float(np.sqrt(ss_between / ss_total)), 1.0)


def _factorize(values) -> tuple[np.ndarray, int]:
    codes: dict = {}
    out = np.empty(len(values), dtype=np.intp)
    for i, v in enumerate(values):
        if v not in codes:
            codes[v] = len(codes)
        out[i] = codes[v]
    return out, len(codes)


def correlation_matrix(
    ds: Dataset, max_records: int | None = None, seed: int = 0
) -> CorrelationMatrix:
    """Association matrix over a cleaned dataset (no missing cells).

    With ``max_records`` set, pairs are computed on a seeded subsample to cap
    the O(pairs x records) cost on very large datasets.
    """
    attrs = ds.schema.attributes
    n = len(attrs)
    columns = [ds.column(i) for i in range(n)]
    if max_records is not None and len(ds.records) > max_records:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(ds.records), size=max_records, replace=False))
        columns = [[col[i] for i in pick] for col in columns]

    values = np.eye(n, dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                if attrs[i].kind == NUMERIC and attrs[j].kind == NUMERIC:
                    v = pearson_abs(columns[i], columns[j])
                elif attrs[i].kind != NUMERIC and attrs[j].kind != NUMERIC:
                    v = cramers_v(columns[i], columns[j])
                elif attrs[i].kind == NUMERIC:
                    v = correlation_ratio(columns[j], columns[i])
                else:
                    v = correlation_ratio(columns[i], columns[j])
            except VizpipeError as e:
                raise type(e)(
                    f"pair ({attrs[i].name}, {attrs[j].name}): {e}"
                ) from e
            values[i, j] = v
            values[j, i] = v
    return CorrelationMatrix(tuple(a.name for a in attrs), values)


def matrix_to_csv(m: CorrelationMatrix) -> str:
    """CSV export with name header row/column and 12-significant-digit values."""
    buf = io.StringIO()
    buf.write("," + ",".join(m.attribute_names) + "\n")
    for i, name in enumerate(m.attribute_names):
        cells = ",".join(format(m.values[i, j], ".12g") for j in range(m.size))
        buf.write(f"{name},{cells}\n")
    return buf.getvalue()
