import numpy as np
import pytest

from vizpipe.dataset import Attribute, AttributeSchema, Dataset, RawRecord


@pytest.fixture
def tiny_schema() -> AttributeSchema:
    return AttributeSchema(
        attributes=(
            Attribute("a", "numeric"),
            Attribute("b", "numeric"),
            Attribute("c", "categorical"),
        ),
        class_attribute="class",
        class_labels=("w", "x", "y", "z"),
    )


def make_dataset(schema: AttributeSchema, rows, labels=None) -> Dataset:
    labels = labels if labels is not None else [None] * len(rows)
    return Dataset(
        schema,
        tuple(RawRecord(tuple(row), lbl) for row, lbl in zip(rows, labels)),
    )


def random_mixed_schema(n_numeric: int, n_categorical: int) -> AttributeSchema:
    attrs = [Attribute(f"n{i}", "numeric") for i in range(n_numeric)]
    attrs += [Attribute(f"c{i}", "categorical") for i in range(n_categorical)]
    return AttributeSchema(tuple(attrs), "class", ("p", "q"))


def random_mixed_dataset(
    rng: np.random.Generator, n_numeric: int, n_categorical: int, n_records: int
) -> Dataset:
    schema = random_mixed_schema(n_numeric, n_categorical)
    rows = []
    for _ in range(n_records):
        row = [float(rng.normal()) for _ in range(n_numeric)]
        row += [f"v{rng.integers(0, 3)}" for _ in range(n_categorical)]
        rows.append(row)
    return make_dataset(schema, rows)
