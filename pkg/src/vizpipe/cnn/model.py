"""Small convolutional classifier trained from scratch.

Architecture: interleaved valid convolutions (ReLU) and max-pools, then
ReLU dense layers and a final linear layer into softmax. Everything is
float64; inputs are byte images scaled by 1/255. Training is plain
minibatch SGD on mean cross-entropy, fully determined by the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from vizpipe.cnn import kernels
from vizpipe.errors import DivergenceError, GeometryError, LabelRangeError
from vizpipe.layout import ImageTensor


@dataclass(frozen=True)
class ConvSpec:
    filters: int
    kernel: int
    stride: int = 1

    def __post_init__(self):
        if self.filters < 1 or self.kernel < 1 or self.stride < 1:
            raise GeometryError(f"invalid conv spec: {self}")


@dataclass(frozen=True)
class PoolSpec:
    window: int
    stride: int

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise GeometryError(f"invalid pool spec: {self}")


@dataclass(frozen=True)
class CnnConfig:
    conv_layers: tuple[ConvSpec, ...]
    pool_layers: tuple[PoolSpec | None, ...]  # aligned with conv_layers
    dense_units: tuple[int, ...]
    num_classes: int
    learning_rate: float = 0.05
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise GeometryError("num_classes must be >= 2")
        if len(self.pool_layers) != len(self.conv_layers):
            raise GeometryError("pool_layers must align with conv_layers (use None entries)")
        if any(u < 1 for u in self.dense_units):
            raise GeometryError("dense_units must be positive")
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate <= 0:
            raise GeometryError("invalid training hyperparameters")

    def to_dict(self) -> dict:
        return {
            "conv_layers": [
                {"filters": c.filters, "kernel": c.kernel, "stride": c.stride}
                for c in self.conv_layers
            ],
            "pool_layers": [
                None if p is None else {"window": p.window, "stride": p.stride}
                for p in self.pool_layers
            ],
            "dense_units": list(self.dense_units),
            "num_classes": self.num_classes,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CnnConfig":
        conv = tuple(ConvSpec(**c) for c in d["conv_layers"])
        pool = tuple(
            None if p is None else PoolSpec(**p) for p in d["pool_layers"]
        )
        return cls(
            conv_layers=conv,
            pool_layers=pool,
            dense_units=tuple(d["dense_units"]),
            num_classes=d["num_classes"],
            learning_rate=d.get("learning_rate", 0.05),
            batch_size=d.get("batch_size", 32),
            epochs=d.get("epochs", 10),
            seed=d.get("seed", 0),
        )


def default_config(num_classes: int, **overrides) -> CnnConfig:
    """conv(8,3x3) -> pool(2/2) -> conv(16,3x3) -> pool(2/2) -> dense(64) -> softmax."""
    cfg = CnnConfig(
        conv_layers=(ConvSpec(8, 3), ConvSpec(16, 3)),
        pool_layers=(PoolSpec(2, 2), PoolSpec(2, 2)),
        dense_units=(64,),
        num_classes=num_classes,
    )
    return replace(cfg, **overrides) if overrides else cfg


def layer_shapes(cfg: CnnConfig, input_hw: tuple[int, int], channels: int = 3) -> dict:
    """Propagate shapes through the stack; raises GeometryError on any dim < 1."""
    h, w = input_hw
    if h < 1 or w < 1:
        raise GeometryError(f"invalid input dims {input_hw}")
    c = channels
    stages = [("input", h, w, c)]
    for i, (conv, pool) in enumerate(zip(cfg.conv_layers, cfg.pool_layers)):
        if conv.kernel > h or conv.kernel > w:
            raise GeometryError(f"conv layer {i}: kernel {conv.kernel} exceeds input {h}x{w}")
        h = (h - conv.kernel) // conv.stride + 1
        w = (w - conv.kernel) // conv.stride + 1
        c = conv.filters
        stages.append((f"conv{i}", h, w, c))
        if pool is not None:
            if pool.window > h or pool.window > w:
                raise GeometryError(f"pool layer {i}: window {pool.window} exceeds input {h}x{w}")
            h = (h - pool.window) // pool.stride + 1
            w = (w - pool.window) // pool.stride + 1
            stages.append((f"pool{i}", h, w, c))
    flat = h * w * c
    dims = [flat, *cfg.dense_units, cfg.num_classes]
    return {"stages": stages, "flat": flat, "dense_dims": dims}


@dataclass
class CnnModel:
    config: CnnConfig
    input_hw: tuple[int, int]
    conv_params: list[dict]  # per conv layer: {"w": (k,k,Cin,F), "b": (F,)}
    dense_params: list[dict]  # per dense layer: {"w": (Din,U), "b": (U,)}
    epochs_run: int = 0
    loss_history: tuple[float, ...] = ()

    @property
    def final_loss(self) -> float | None:
        return self.loss_history[-1] if self.loss_history else None


@dataclass(frozen=True)
class Prediction:
    class_probs: np.ndarray
    argmax_class: int


def init_model(cfg: CnnConfig, input_hw: tuple[int, int]) -> CnnModel:
    """He-initialized model; the draw sequence is fixed by cfg.seed."""
    shapes = layer_shapes(cfg, input_hw)
    rng = np.random.default_rng(cfg.seed)
    conv_params = []
    c_in = 3
    for conv in cfg.conv_layers:
        k = conv.kernel
        std = np.sqrt(2.0 / (k * k * c_in))
        conv_params.append(
            {
                "w": rng.normal(0.0, std, size=(k, k, c_in, conv.filters)),
                "b": np.zeros(conv.filters, dtype=np.float64),
            }
        )
        c_in = conv.filters
    dense_params = []
    dims = shapes["dense_dims"]
    for d_in, d_out in zip(dims, dims[1:]):
        std = np.sqrt(2.0 / d_in)
        dense_params.append(
            {
                "w": rng.normal(0.0, std, size=(d_in, d_out)),
                "b": np.zeros(d_out, dtype=np.float64),
            }
        )
    return CnnModel(cfg, tuple(input_hw), conv_params, dense_params)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _scale(images: np.ndarray) -> np.ndarray:
    return images.astype(np.float64) / 255.0


def _check_input(m: CnnModel, images: np.ndarray) -> None:
    h, w = m.input_hw
    if images.ndim != 4 or images.shape[1:] != (h, w, 3):
        raise GeometryError(
            f"expected images of shape (N, {h}, {w}, 3), got {images.shape}"
        )


def _forward_arrays(m: CnnModel, images: np.ndarray, keep_caches: bool = False):
    """Returns (probs, caches); caches hold what backprop needs per stage."""
    _check_input(m, images)
    x = _scale(images)
    conv_caches = []
    for conv, pool, params in zip(m.config.conv_layers, m.config.pool_layers, m.conv_params):
        z = kernels.conv2d(x, params["w"], params["b"], conv.stride)
        if z.shape[1] < 1 or z.shape[2] < 1:
            raise GeometryError("convolution output collapsed below 1x1")
        a = np.maximum(z, 0.0)
        cache = {"x": x, "z": z}
        if pool is not None:
            pooled, arg = kernels.maxpool2d(a, pool.window, pool.stride)
            cache["arg"] = arg
            cache["pre_pool_hw"] = a.shape[1:3]
            a = pooled
        conv_caches.append(cache)
        x = a
    flat = x.reshape(x.shape[0], -1)
    conv_out_shape = x.shape
    dense_caches = []
    for i, params in enumerate(m.dense_params):
        z = flat @ params["w"] + params["b"]
        dense_caches.append({"x": flat, "z": z})
        flat = np.maximum(z, 0.0) if i < len(m.dense_params) - 1 else z
    probs = _softmax(flat)
    if not keep_caches:
        return probs, None
    return probs, {
        "conv": conv_caches,
        "dense": dense_caches,
        "conv_out_shape": conv_out_shape,
    }


def forward(img: ImageTensor | np.ndarray, m: CnnModel) -> Prediction:
    """Class probabilities for one image; ties go to the smallest class index."""
    pixels = img.pixels if isinstance(img, ImageTensor) else img
    probs, _ = _forward_arrays(m, pixels[None, ...])
    p = probs[0]
    return Prediction(p, int(np.argmax(p)))


def predict_batch(imgs, m: CnnModel) -> list[Prediction]:
    """forward applied per image, in order; results match the per-image loop
    bit for bit (batched matmuls would drift in the last ulp)."""
    return [forward(img, m) for img in imgs]


def _loss_grads_arrays(m: CnnModel, images: np.ndarray, labels: np.ndarray):
    n = images.shape[0]
    probs, caches = _forward_arrays(m, images, keep_caches=True)
    # stable cross-entropy straight from the cached logits
    logits = caches["dense"][-1]["z"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), labels].mean())

    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    dense_grads = [None] * len(m.dense_params)
    d = dlogits
    for i in range(len(m.dense_params) - 1, -1, -1):
        cache = caches["dense"][i]
        if i < len(m.dense_params) - 1:
            d = d * (cache["z"] > 0.0)
        dense_grads[i] = {"w": cache["x"].T @ d, "b": d.sum(axis=0)}
        d = d @ m.dense_params[i]["w"].T

    d = d.reshape(caches["conv_out_shape"])
    conv_grads = [None] * len(m.conv_params)
    for i in range(len(m.conv_params) - 1, -1, -1):
        cache = caches["conv"][i]
        pool = m.config.pool_layers[i]
        if pool is not None:
            h, w = cache["pre_pool_hw"]
            d = kernels.maxpool2d_grad(cache["arg"], d, h, w)
        d = d * (cache["z"] > 0.0)
        dx, dw, db = kernels.conv2d_grad(
            cache["x"], m.conv_params[i]["w"], m.config.conv_layers[i].stride, d
        )
        conv_grads[i] = {"w": dw, "b": db}
        d = dx
    return loss, {"conv": conv_grads, "dense": dense_grads}


def loss_and_gradients(batch, m: CnnModel):
    """Mean cross-entropy over the batch plus gradients for every parameter."""
    if not batch:
        raise LengthMismatchError("empty batch")
    images = np.stack(
        [im.pixels if isinstance(im, ImageTensor) else im for im, _ in batch]
    )
    labels = np.array([lbl for _, lbl in batch], dtype=np.intp)
    return _loss_grads_arrays(m, images, labels)


def _as_arrays(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, tuple) and len(data) == 2 and isinstance(data[0], np.ndarray):
        return data
    images = np.stack(
        [im.pixels if isinstance(im, ImageTensor) else im for im, _ in data]
    )
    labels = np.array([lbl for _, lbl in data], dtype=np.intp)
    return images, labels


def train(data, cfg: CnnConfig) -> CnnModel:
    """Minibatch SGD; a pure function of (dataset order, config, seed)."""
    images, labels = _as_arrays(data)
    if images.shape[0] == 0:
        raise GeometryError("cannot train on an empty dataset")
    if labels.min() < 0 or labels.max() >= cfg.num_classes:
        raise LabelRangeError(
            f"labels must be in [0, {cfg.num_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    input_hw = (images.shape[1], images.shape[2])
    model = init_model(cfg, input_hw)
    _check_input(model, images)

    rng = np.random.default_rng(cfg.seed)
    rng = np.random.default_rng(rng.integers(0, 2**63))  # shuffle stream, distinct from init
    n = images.shape[0]
    history = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            loss, grads = _loss_grads_arrays(model, images[idx], labels[idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"training loss became non-finite: {loss}")
            epoch_loss += loss * len(idx)
            for params, g in zip(model.conv_params, grads["conv"]):
                params["w"] -= cfg.learning_rate * g["w"]
                params["b"] -= cfg.learning_rate * g["b"]
            for params, g in zip(model.dense_params, grads["dense"]):
                params["w"] -= cfg.learning_rate * g["w"]
                params["b"] -= cfg.learning_rate * g["b"]
        history.append(epoch_loss / n)
    model.epochs_run = cfg.epochs
    model.loss_history = tuple(history)
    return model


def conv_forward(img: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 1) -> np.ndarray:
    """One conv layer on a single HxWxC image: cross-correlation + bias + ReLU."""
    if img.ndim != 3 or w.ndim != 4 or img.shape[2] != w.shape[2]:
        raise GeometryError(
            f"incompatible shapes: image {img.shape}, weights {w.shape}"
        )
    k = w.shape[0]
    if k > img.shape[0] or k > img.shape[1]:
        raise GeometryError(f"kernel {k} exceeds input {img.shape[:2]}")
    out = kernels.conv2d(np.asarray(img, dtype=np.float64)[None], w, b, stride)[0]
    return np.maximum(out, 0.0)


def maxpool_forward(img: np.ndarray, window: int, stride: int) -> np.ndarray:
    """Max-pool a single HxWxC image (ties: first element in raster order)."""
    if img.ndim != 3:
        raise GeometryError(f"expected HxWxC input, got shape {img.shape}")
    if window > img.shape[0] or window > img.shape[1]:
        raise GeometryError(f"window {window} exceeds input {img.shape[:2]}")
    out, _ = kernels.maxpool2d(np.asarray(img, dtype=np.float64)[None], window, stride)
    return out[0]
