import numpy as np
import pytest

from vizpipe.cnn.checkpoint import load_checkpoint, save_checkpoint
from vizpipe.cnn.model import CnnConfig, ConvSpec, PoolSpec, init_model, train
from vizpipe.errors import ArchiveError

from test_cnn import separable_images


def small_cfg(seed=0, epochs=2):
    return CnnConfig(
        conv_layers=(ConvSpec(2, 3),),
        pool_layers=(PoolSpec(2, 2),),
        dense_units=(4,),
        num_classes=4,
        learning_rate=0.1,
        batch_size=8,
        epochs=epochs,
        seed=seed,
    )


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    images, labels = separable_images(rng, n_per_class=4)
    model = train((images, labels), small_cfg())
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.config == model.config
    assert loaded.input_hw == model.input_hw
    assert loaded.epochs_run == model.epochs_run
    assert loaded.loss_history == model.loss_history
    for a, b in zip(
        model.conv_params + model.dense_params,
        loaded.conv_params + loaded.dense_params,
    ):
        assert np.array_equal(a["w"], b["w"])
        assert np.array_equal(a["b"], b["b"])


def test_byte_identical_across_runs(tmp_path):
    rng = np.random.default_rng(1)
    images, labels = separable_images(rng, n_per_class=4)
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(train((images, labels), small_cfg(seed=5)), p1)
    save_checkpoint(train((images, labels), small_cfg(seed=5)), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_untrained_model_round_trip(tmp_path):
    model = init_model(small_cfg(), (6, 6))
    path = tmp_path / "init.ckpt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.loss_history == ()
    assert loaded.epochs_run == 0


def test_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(ArchiveError):
        load_checkpoint(path)


def test_rejects_truncation(tmp_path):
    model = init_model(small_cfg(), (6, 6))
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 10])
    with pytest.raises(ArchiveError):
        load_checkpoint(path)
