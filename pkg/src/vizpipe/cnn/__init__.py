from vizpipe.cnn.model import (
    CnnConfig,
    CnnModel,
    ConvSpec,
    PoolSpec,
    Prediction,
    conv_forward,
    default_config,
    forward,
    layer_shapes,
    loss_and_gradients,
    maxpool_forward,
    predict_batch,
    train,
)

__all__ = [
    "CnnConfig",
    "CnnModel",
    "ConvSpec",
    "PoolSpec",
    "Prediction",
    "conv_forward",
    "default_config",
    "forward",
    "layer_shapes",
    "loss_and_gradients",
    "maxpool_forward",
    "predict_batch",
    "train",
]
