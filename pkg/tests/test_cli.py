import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from vizpipe.archive import read_archive
from vizpipe.cli import main
from vizpipe.sidecar import load_sidecar

SRC = str(Path(__file__).resolve().parent.parent / "src")


def write_spec(path: Path, **overrides) -> Path:
    spec = dict(
        class_names=["w", "x", "y", "z"],
        train_records_per_class=30,
        test_records_per_class=10,
        numeric_attributes=4,
        categorical_attributes=1,
        signal_strength=3.0,
        missing_rate=0.03,
        seed=7,
    )
    spec.update(overrides)
    path.write_text(json.dumps(spec))
    return path


def write_cnn_config(path: Path, **overrides) -> Path:
    cfg = dict(
        conv_layers=[{"filters": 4, "kernel": 2, "stride": 1}],
        pool_layers=[None],
        dense_units=[16],
        learning_rate=0.1,
        batch_size=16,
        epochs=8,
        seed=5,
    )
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def workspace(tmp_path):
    spec = write_spec(tmp_path / "spec.json")
    assert main(["synth", str(spec), "--out", str(tmp_path / "data")]) == 0
    return tmp_path


def test_module_entry_point(tmp_path):
    env = dict(os.environ, PYTHONPATH=SRC)
    result = subprocess.run(
        [sys.executable, "-m", "vizpipe", "--version"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert result.returncode == 0
    assert "vizpipe" in result.stdout


def test_full_chain(workspace, capsys):
    data = workspace / "data"
    sidecar = workspace / "model.sidecar.json"
    assert (
        main(
            [
                "fit",
                str(data / "train.csv"),
                "--schema",
                str(data / "schema.txt"),
                "--out",
                str(sidecar),
            ]
        )
        == 0
    )
    assert sidecar.exists()

    train_arch = workspace / "train.vzt"
    test_arch = workspace / "test.vzt"
    for csv_name, arch in (("train.csv", train_arch), ("test.csv", test_arch)):
        assert (
            main(
                [
                    "render",
                    str(data / csv_name),
                    "--sidecar",
                    str(sidecar),
                    "--out",
                    str(arch),
                ]
            )
            == 0
        )

    images, labels, classes = read_archive(train_arch)
    assert classes == ("w", "x", "y", "z")
    assert images.shape[0] == 120

    ckpt = workspace / "model.ckpt"
    cfg = write_cnn_config(workspace / "cnn.json")
    assert main(["train", str(train_arch), "--config", str(cfg), "--out", str(ckpt)]) == 0

    report = workspace / "report"
    assert main(["eval", str(test_arch), "--checkpoint", str(ckpt), "--out", str(report)]) == 0
    out = capsys.readouterr().out
    assert "%" in out
    assert (workspace / "report.txt").exists()
    csv_lines = (workspace / "report.csv").read_text().splitlines()
    assert csv_lines[0] == "class,support,recall"

    predicted = workspace / "predicted.csv"
    assert (
        main(
            [
                "predict",
                str(data / "test.csv"),
                "--sidecar",
                str(sidecar),
                "--checkpoint",
                str(ckpt),
                "--out",
                str(predicted),
            ]
        )
        == 0
    )
    rows = predicted.read_text().strip().splitlines()
    assert len(rows) == 40  # all test records survive cleaning here
    assert all(row.rsplit(",", 1)[1] in {"w", "x", "y", "z"} for row in rows)


def test_fit_two_attribute_grid_is_1x1(tmp_path, capsys):
    (tmp_path / "d.csv").write_text("1,2,w\n3,1,x\n2,5,w\n4,4,x\n")
    (tmp_path / "schema.txt").write_text("a,numeric\nb,numeric\nclass,label,w|x\n")
    sidecar_path = tmp_path / "s.json"
    assert (
        main(
            [
                "fit",
                str(tmp_path / "d.csv"),
                "--schema",
                str(tmp_path / "schema.txt"),
                "--out",
                str(sidecar_path),
            ]
        )
        == 0
    )
    assert load_sidecar(sidecar_path).layout.grid_hw == (1, 1)
    assert "1x1 grid" in capsys.readouterr().out


def test_fit_deterministic_sidecar(workspace):
    data = workspace / "data"
    outs = []
    for name in ("s1.json", "s2.json"):
        path = workspace / name
        assert (
            main(
                [
                    "fit",
                    str(data / "train.csv"),
                    "--schema",
                    str(data / "schema.txt"),
                    "--out",
                    str(path),
                    "--seed",
                    "3",
                ]
            )
            == 0
        )
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_render_empty_csv(workspace):
    data = workspace / "data"
    sidecar = workspace / "s.json"
    main(
        ["fit", str(data / "train.csv"), "--schema", str(data / "schema.txt"), "--out", str(sidecar)]
    )
    empty = workspace / "empty.csv"
    empty.write_text("")
    arch = workspace / "empty.vzt"
    assert main(["render", str(empty), "--sidecar", str(sidecar), "--out", str(arch)]) == 0
    images, labels, classes = read_archive(arch)
    assert images.shape[0] == 0
    assert classes == ("w", "x", "y", "z")


def test_render_png_output(workspace):
    from PIL import Image

    data = workspace / "data"
    sidecar = workspace / "s.json"
    main(
        ["fit", str(data / "train.csv"), "--schema", str(data / "schema.txt"), "--out", str(sidecar)]
    )
    five = workspace / "five.csv"
    five.write_text("".join((data / "test.csv").read_text().splitlines(True)[:5]))
    arch = workspace / "five.vzt"
    png_dir = workspace / "pngs"
    assert (
        main(
            [
                "render",
                str(five),
                "--sidecar",
                str(sidecar),
                "--out",
                str(arch),
                "--png",
                str(png_dir),
            ]
        )
        == 0
    )
    images, _, _ = read_archive(arch)
    assert images.shape[0] == 5
    files = sorted(png_dir.iterdir())
    assert len(files) == 5
    with Image.open(files[0]) as im:
        assert np.array_equal(np.asarray(im), images[0])


def test_render_deterministic_archive(workspace):
    data = workspace / "data"
    sidecar = workspace / "s.json"
    main(
        ["fit", str(data / "train.csv"), "--schema", str(data / "schema.txt"), "--out", str(sidecar)]
    )
    a1, a2 = workspace / "a1.vzt", workspace / "a2.vzt"
    for arch in (a1, a2):
        main(["render", str(data / "train.csv"), "--sidecar", str(sidecar), "--out", str(arch)])
    assert a1.read_bytes() == a2.read_bytes()


def test_usage_error_exit_code():
    assert main(["fit"]) == 1
    assert main(["no-such-command"]) == 1
    assert main([]) == 1


def test_missing_file_exit_code(tmp_path, capsys):
    code = main(
        [
            "fit",
            str(tmp_path / "nope.csv"),
            "--schema",
            str(tmp_path / "nope.txt"),
            "--out",
            str(tmp_path / "s.json"),
        ]
    )
    assert code == 2
    assert "[dataset]" in capsys.readouterr().err


def test_data_error_exit_code_and_stage(tmp_path, capsys):
    (tmp_path / "d.csv").write_text("1,2\n")  # wrong arity
    (tmp_path / "schema.txt").write_text("a,numeric\nb,numeric\nc,numeric\nclass,label,w|x\n")
    code = main(
        [
            "fit",
            str(tmp_path / "d.csv"),
            "--schema",
            str(tmp_path / "schema.txt"),
            "--out",
            str(tmp_path / "s.json"),
        ]
    )
    assert code == 2
    assert "[dataset]" in capsys.readouterr().err


def test_synth_seed_override(tmp_path):
    spec = write_spec(tmp_path / "spec.json")
    assert main(["synth", str(spec), "--out", str(tmp_path / "a"), "--seed", "1"]) == 0
    assert main(["synth", str(spec), "--out", str(tmp_path / "b"), "--seed", "1"]) == 0
    assert main(["synth", str(spec), "--out", str(tmp_path / "c"), "--seed", "2"]) == 0
    a = (tmp_path / "a" / "train.csv").read_bytes()
    b = (tmp_path / "b" / "train.csv").read_bytes()
    c = (tmp_path / "c" / "train.csv").read_bytes()
    assert a == b != c


def test_pipeline_with_dropped_attribute(tmp_path):
    # one column is mostly missing and another is constant: both are dropped
    # at fit time and the reduced schema must flow through render and predict
    rng = np.random.default_rng(0)
    rows = []
    for i in range(80):
        klass = "w" if i % 2 == 0 else "x"
        signal = rng.normal(3.0 if klass == "w" else 0.0)
        mostly_missing = "?" if rng.random() < 0.8 else "1.0"
        rows.append(f"{signal},{mostly_missing},5.0,{rng.normal()},{klass}")
    (tmp_path / "d.csv").write_text("\n".join(rows) + "\n")
    (tmp_path / "schema.txt").write_text(
        "sig,numeric\nsparse,numeric\nconst,numeric\nnoise,numeric\nclass,label,w|x\n"
    )
    sidecar_path = tmp_path / "s.json"
    assert (
        main(
            [
                "fit",
                str(tmp_path / "d.csv"),
                "--schema",
                str(tmp_path / "schema.txt"),
                "--out",
                str(sidecar_path),
            ]
        )
        == 0
    )
    sc = load_sidecar(sidecar_path)
    assert dict(sc.cleaning.dropped_attributes) == {
        "sparse": "missing_ratio",
        "const": "constant",
    }
    assert sc.encoder.schema.attribute_names == ("sig", "noise")

    arch = tmp_path / "d.vzt"
    assert main(["render", str(tmp_path / "d.csv"), "--sidecar", str(sidecar_path), "--out", str(arch)]) == 0
    images, labels, _ = read_archive(arch)
    assert images.shape[0] == 80  # record drops not triggered here

    cfg = write_cnn_config(
        tmp_path / "cnn.json",
        conv_layers=[{"filters": 2, "kernel": 1, "stride": 1}],
        epochs=3,
    )
    ckpt = tmp_path / "m.ckpt"
    assert main(["train", str(arch), "--config", str(cfg), "--out", str(ckpt)]) == 0
    out_csv = tmp_path / "labeled.csv"
    assert (
        main(
            [
                "predict",
                str(tmp_path / "d.csv"),
                "--sidecar",
                str(sidecar_path),
                "--checkpoint",
                str(ckpt),
                "--out",
                str(out_csv),
            ]
        )
        == 0
    )
    rows_out = out_csv.read_text().strip().splitlines()
    assert len(rows_out) == 80
    # predicted rows carry only the surviving attributes plus the label
    assert all(len(row.split(",")) == 3 for row in rows_out)


def test_divergence_exit_code(workspace, capsys):
    data = workspace / "data"
    sidecar = workspace / "s.json"
    main(
        ["fit", str(data / "train.csv"), "--schema", str(data / "schema.txt"), "--out", str(sidecar)]
    )
    arch = workspace / "t.vzt"
    main(["render", str(data / "train.csv"), "--sidecar", str(sidecar), "--out", str(arch)])
    cfg = write_cnn_config(workspace / "cnn.json", learning_rate=1e200, epochs=5)
    with np.errstate(over="ignore", invalid="ignore"):
        code = main(["train", str(arch), "--config", str(cfg), "--out", str(workspace / "m.ckpt")])
    assert code == 3
    assert "[cnn]" in capsys.readouterr().err


def test_fit_corr_flags(workspace):
    data = workspace / "data"
    sidecar = workspace / "s.json"
    corr_csv = workspace / "corr.csv"
    assert (
        main(
            [
                "fit",
                str(data / "train.csv"),
                "--schema",
                str(data / "schema.txt"),
                "--out",
                str(sidecar),
                "--corr-sample",
                "40",
                "--seed",
                "2",
                "--corr-csv",
                str(corr_csv),
            ]
        )
        == 0
    )
    lines = corr_csv.read_text().splitlines()
    assert lines[0].startswith(",")
    assert len(lines) == 6  # header + 5 surviving attributes


def test_header_flag(workspace, tmp_path):
    data = workspace / "data"
    sidecar = workspace / "s.json"
    main(
        ["fit", str(data / "train.csv"), "--schema", str(data / "schema.txt"), "--out", str(sidecar)]
    )
    with_header = tmp_path / "h.csv"
    with_header.write_text("col,col,col,col,col,label\n" + (data / "test.csv").read_text())
    arch = tmp_path / "h.vzt"
    assert (
        main(
            [
                "render",
                str(with_header),
                "--sidecar",
                str(sidecar),
                "--out",
                str(arch),
                "--header",
            ]
        )
        == 0
    )
    images, _, _ = read_archive(arch)
    assert images.shape[0] == 40


def test_train_rejects_unlabeled_archive(workspace, capsys):
    from vizpipe.archive import write_archive

    arch = workspace / "unlabeled.vzt"
    write_archive(
        arch, np.zeros((2, 2, 2, 3), dtype=np.uint8), [None, 0], ("w", "x", "y", "z")
    )
    code = main(["train", str(arch), "--out", str(workspace / "m.ckpt")])
    assert code == 2
    assert "[cnn]" in capsys.readouterr().err
