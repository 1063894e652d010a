"""Seeded synthetic dataset generator: a desk-scale labeled CSV pair.

Each class plants a signal: numeric attribute j gets a mean shift for
class j % K, and categorical attribute j skews its category distribution
toward category (j + k) % m under class k. A configurable fraction of
feature cells is replaced by the missing marker to exercise cleaning.
Identical specs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vizpipe.errors import SynthSpecError


@dataclass(frozen=True)
class SyntheticSpec:
    class_names: tuple[str, ...]
    train_records_per_class: int
    test_records_per_class: int
    numeric_attributes: int
    categorical_attributes: int
    categories_per_attribute: int = 4
    noise_attributes: int = 0  # extra numeric columns with no class signal
    signal_strength: float = 2.5  # numeric mean shift
    category_skew: float = 0.6  # extra probability mass on the dominant category
    missing_rate: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if len(self.class_names) < 2:
            raise SynthSpecError("need at least 2 classes")
        if len(set(self.class_names)) != len(self.class_names):
            raise SynthSpecError("class names must be unique")
        if self.train_records_per_class < 1 or self.test_records_per_class < 0:
            raise SynthSpecError("invalid per-class record counts")
        if self.numeric_attributes + self.categorical_attributes < 1:
            raise SynthSpecError("need at least one feature attribute")
        if self.categories_per_attribute < 2:
            raise SynthSpecError("categorical attributes need >= 2 categories")
        if self.noise_attributes < 0:
            raise SynthSpecError("noise_attributes must be >= 0")
        if self.signal_strength <= 0 and (
            self.categorical_attributes == 0 or self.category_skew <= 0
        ):
            raise SynthSpecError("at least one attribute must carry a class signal")
        if not 0.0 <= self.missing_rate < 1.0:
            raise SynthSpecError("missing_rate must be in [0, 1)")
        if not 0.0 <= self.category_skew < 1.0:
            raise SynthSpecError("category_skew must be in [0, 1)")

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise SynthSpecError(f"spec is not valid JSON: {e}") from e
        if not isinstance(d, dict):
            raise SynthSpecError("spec must be a JSON object")
        try:
            return cls(
                class_names=tuple(d["class_names"]),
                train_records_per_class=d["train_records_per_class"],
                test_records_per_class=d["test_records_per_class"],
                numeric_attributes=d["numeric_attributes"],
                categorical_attributes=d["categorical_attributes"],
                categories_per_attribute=d.get("categories_per_attribute", 4),
                noise_attributes=d.get("noise_attributes", 0),
                signal_strength=d.get("signal_strength", 2.5),
                category_skew=d.get("category_skew", 0.6),
                missing_rate=d.get("missing_rate", 0.02),
                seed=d.get("seed", 0),
            )
        except (KeyError, TypeError) as e:
            raise SynthSpecError(f"bad spec field: {e}") from e


def schema_text(spec: SyntheticSpec) -> str:
    lines = [f"num_{j:02d},numeric" for j in range(spec.numeric_attributes)]
    lines += [f"noise_{j:02d},numeric" for j in range(spec.noise_attributes)]
    lines += [f"cat_{j:02d},categorical" for j in range(spec.categorical_attributes)]
    lines.append("class,label," + "|".join(spec.class_names))
    return "\n".join(lines) + "\n"


def _category_probs(spec: SyntheticSpec, attr: int, klass: int) -> np.ndarray:
    m = spec.categories_per_attribute
    probs = np.full(m, (1.0 - spec.category_skew) / m)
    probs[(attr + klass) % m] += spec.category_skew
    return probs


def _rows(spec: SyntheticSpec, rng: np.random.Generator, per_class: int) -> list[str]:
    k = len(spec.class_names)
    rows = []
    for klass in range(k):
        for _ in range(per_class):
            cells = []
            for j in range(spec.numeric_attributes):
                mean = spec.signal_strength if j % k == klass else 0.0
                cells.append(repr(float(rng.normal(mean, 1.0))))
            for _ in range(spec.noise_attributes):
                cells.append(repr(float(rng.normal(0.0, 1.0))))
            for j in range(spec.categorical_attributes):
                probs = _category_probs(spec, j, klass)
                cells.append(f"c{rng.choice(len(probs), p=probs)}")
            # missing mask drawn after values keeps the stream layout fixed
            for i in range(len(cells)):
                if spec.missing_rate and rng.random() < spec.missing_rate:
                    cells[i] = "?"
            cells.append(spec.class_names[klass])
            rows.append(",".join(cells))
    order = rng.permutation(len(rows))
    return [rows[i] for i in order]


def generate(spec: SyntheticSpec) -> tuple[str, str, str]:
    """Returns (train_csv, test_csv, schema_config) as text."""
    rng = np.random.default_rng(spec.seed)
    train = _rows(spec, rng, spec.train_records_per_class)
    test = _rows(spec, rng, spec.test_records_per_class)
    train_csv = "\n".join(train) + ("\n" if train else "")
    test_csv = "\n".join(test) + ("\n" if test else "")
    return train_csv, test_csv, schema_text(spec)


def generate_files(spec: SyntheticSpec, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_csv, test_csv, schema = generate(spec)
    paths = {
        "train": out / "train.csv",
        "test": out / "test.csv",
        "schema": out / "schema.txt",
    }
    paths["train"].write_text(train_csv, encoding="utf-8")
    paths["test"].write_text(test_csv, encoding="utf-8")
    paths["schema"].write_text(schema, encoding="utf-8")
    return paths
