"""Command-line pipeline: fit | render | train | eval | predict | synth.

Every failure is tagged with the stage that raised it
(dataset/cleaning/correlation/encoding/layout/cnn/eval). Exit codes:
0 success, 1 usage error, 2 data error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from vizpipe import __version__
from vizpipe.archive import read_archive, write_archive
from vizpipe.cleaning import CleaningPolicy, apply_cleaning, fit_cleaning
from vizpipe.cnn.checkpoint import load_checkpoint, save_checkpoint
from vizpipe.cnn.model import CnnConfig, default_config, predict_batch, train
from vizpipe.correlation import correlation_matrix, matrix_to_csv
from vizpipe.dataset import Dataset, load_csv, parse_schema
from vizpipe.encoding import encode_record, fit_encoder
from vizpipe.errors import UnlabeledError, UsageError, VizpipeError
from vizpipe.evaluation import confusion, recall_report, report_to_csv, report_to_text
from vizpipe.layout import build_layout, order_attributes, render_record
from vizpipe.png import export_png
from vizpipe.sidecar import PipelineSidecar, load_sidecar, save_sidecar
from vizpipe.synth import SyntheticSpec, generate_files


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the contract wants 1
    def error(self, message):
        raise UsageError(message)


class _StageFailure(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class _stage:
    """Tags any pipeline error raised inside the block with its stage name."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (VizpipeError, OSError)):
            raise _StageFailure(self.name, exc) from exc
        return False


def _read_policy(path: str | None) -> CleaningPolicy:
    if path is None:
        return CleaningPolicy()
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return CleaningPolicy(
        max_missing_ratio_attribute=d.get("max_missing_ratio_attribute", 0.6),
        max_missing_ratio_record=d.get("max_missing_ratio_record", 0.5),
        drop_constant_attributes=d.get("drop_constant_attributes", True),
    )


def _read_cnn_config(path: str | None, num_classes: int, seed: int | None) -> CnnConfig:
    if path is None:
        cfg = default_config(num_classes)
    else:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        d.setdefault("num_classes", num_classes)
        if d["num_classes"] != num_classes:
            raise UsageError(
                f"config declares {d['num_classes']} classes, archive has {num_classes}"
            )
        cfg = CnnConfig.from_dict(d)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _load_schema_file(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_schema(fh.read())


def cmd_fit(args) -> int:
    with _stage("dataset"):
        schema = _load_schema_file(args.schema)
        ds = load_csv(args.train_csv, schema, header=args.header)
    with _stage("cleaning"):
        policy = _read_policy(args.policy)
        model = fit_cleaning(ds, policy)
        cleaned = apply_cleaning(ds, model)
    with _stage("correlation"):
        corr = correlation_matrix(cleaned, max_records=args.corr_sample, seed=args.seed)
    with _stage("encoding"):
        encoder = fit_encoder(cleaned)
    with _stage("layout"):
        order = order_attributes(corr)
        plan = build_layout(encoder, order)
        sidecar = PipelineSidecar(schema, model, encoder, corr, plan)
        save_sidecar(sidecar, args.out)
    if args.corr_csv:
        Path(args.corr_csv).write_text(matrix_to_csv(corr), encoding="utf-8")
    h, w = plan.grid_hw
    print(
        f"fitted: {len(cleaned.records)} records, "
        f"{len(encoder.schema.attributes)} attributes, "
        f"{encoder.num_channels} channels -> {h}x{w} grid"
    )
    print(f"sidecar written to {args.out}")
    return 0


def _render_images(ds: Dataset, sidecar: PipelineSidecar):
    cleaned = apply_cleaning(ds, sidecar.cleaning)
    h, w = sidecar.layout.grid_hw
    images = np.zeros((len(cleaned.records), h, w, 3), dtype=np.uint8)
    labels: list[int | None] = []
    for i, record in enumerate(cleaned.records):
        cv = encode_record(record, sidecar.encoder)
        images[i] = render_record(cv, sidecar.layout).pixels
        labels.append(record.label)
    return cleaned, images, labels


def cmd_render(args) -> int:
    with _stage("layout"):
        sidecar = load_sidecar(args.sidecar)
    with _stage("dataset"):
        ds = load_csv(args.csv, sidecar.schema, header=args.header)
    with _stage("encoding"):
        cleaned, images, labels = _render_images(ds, sidecar)
    with _stage("layout"):
        write_archive(args.out, images, labels, sidecar.schema.class_labels)
        if args.png:
            png_dir = Path(args.png)
            png_dir.mkdir(parents=True, exist_ok=True)
            for i in range(images.shape[0]):
                export_png(images[i], png_dir / f"record_{i:06d}.png")
    print(f"rendered {images.shape[0]} records to {args.out}")
    return 0


def cmd_train(args) -> int:
    with _stage("cnn"):
        images, labels, class_labels = read_archive(args.archive)
        if any(lbl is None for lbl in labels):
            raise UnlabeledError("training archive contains unlabeled records")
        cfg = _read_cnn_config(args.config, len(class_labels), args.seed)
        model = train((images, np.array(labels, dtype=np.intp)), cfg)
        save_checkpoint(model, args.out)
    loss = f"{model.final_loss:.6f}" if model.final_loss is not None else "n/a"
    print(f"trained {cfg.epochs} epochs on {images.shape[0]} records, final loss {loss}")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    with _stage("cnn"):
        images, labels, class_labels = read_archive(args.archive)
        model = load_checkpoint(args.checkpoint)
        predictions = predict_batch(images, model)
    with _stage("eval"):
        if any(lbl is None for lbl in labels):
            raise UnlabeledError("eval archive contains unlabeled records")
        cm = confusion(
            labels, [p.argmax_class for p in predictions], len(class_labels), class_labels
        )
        report = recall_report(cm)
        text = report_to_text(report)
        out_prefix = Path(args.out)
        out_prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{args.out}.txt").write_text(text, encoding="utf-8")
        Path(f"{args.out}.csv").write_text(report_to_csv(report), encoding="utf-8")
    print(text, end="")
    return 0


def cmd_predict(args) -> int:
    with _stage("layout"):
        sidecar = load_sidecar(args.sidecar)
    with _stage("dataset"):
        ds = load_csv(args.csv, sidecar.schema, header=args.header)
    with _stage("encoding"):
        cleaned, images, _ = _render_images(ds, sidecar)
    with _stage("cnn"):
        model = load_checkpoint(args.checkpoint)
        predictions = predict_batch(images, model)
    with _stage("eval"):
        labels = sidecar.schema.class_labels
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            for record, pred in zip(cleaned.records, predictions):
                row = []
                for attr, cell in zip(cleaned.schema.attributes, record.values):
                    if cell is None:
                        row.append(attr.missing_marker)
                    elif isinstance(cell, float):
                        row.append(repr(cell))
                    else:
                        row.append(cell)
                row.append(labels[pred.argmax_class])
                writer.writerow(row)
    print(f"predicted {len(predictions)} records to {args.out}")
    return 0


def cmd_synth(args) -> int:
    with _stage("dataset"):
        with open(args.spec, encoding="utf-8") as fh:
            spec = SyntheticSpec.from_json(fh.read())
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
        paths = generate_files(spec, args.out)
    k = len(spec.class_names)
    print(
        f"generated {k * spec.train_records_per_class} train / "
        f"{k * spec.test_records_per_class} test records in {args.out}"
    )
    for name, p in paths.items():
        print(f"  {name}: {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vizpipe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vizpipe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit cleaning/correlation/encoder/layout, write sidecar")
    p.add_argument("train_csv")
    p.add_argument("--schema", required=True, help="schema config file")
    p.add_argument("--policy", help="cleaning policy JSON")
    p.add_argument("--out", required=True, help="sidecar output path")
    p.add_argument("--header", action="store_true", help="skip the first CSV row")
    p.add_argument("--seed", type=int, default=0, help="correlation subsample seed")
    p.add_argument("--corr-sample", type=int, help="cap records used for correlation")
    p.add_argument("--corr-csv", help="also export the correlation matrix as CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("render", help="render records into a tensor archive")
    p.add_argument("csv")
    p.add_argument("--sidecar", required=True)
    p.add_argument("--out", required=True, help="tensor archive output path")
    p.add_argument("--png", help="directory for per-record PNGs")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("train", help="train the CNN on a tensor archive")
    p.add_argument("archive")
    p.add_argument("--config", help="CNN config JSON")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="per-class recall report for a labeled archive")
    p.add_argument("archive")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="report path prefix (.txt/.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="label a CSV through the full pipeline")
    p.add_argument("csv")
    p.add_argument("--sidecar", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="labeled CSV output path")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic train/test dataset")
    p.add_argument("spec", help="synthetic spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the generation seed")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"vizpipe: usage error: {e}", file=sys.stderr)
        return 1
    except _StageFailure as e:
        cause = e.cause
        code = cause.exit_code if isinstance(cause, VizpipeError) else 2
        print(f"vizpipe: error in stage [{e.stage}]: {cause}", file=sys.stderr)
        return code
    except VizpipeError as e:
        print(f"vizpipe: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"vizpipe: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
