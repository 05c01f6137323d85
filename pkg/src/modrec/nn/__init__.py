"""From-scratch convolutional classifier: layers, network, Adam, training loop."""
from .adam import AdamState, adam_step
from .layers import (
    conv2d_forward,
    cross_entropy,
    dense_forward,
    dropout_forward,
    l2_penalty,
    loss,
    relu,
    softmax,
)
from .network import NetSpec, backward, forward, init_params, predict
from .training import Hyperparams, LossTrace, TrainResult, accuracy, train

__all__ = [
    "AdamState",
    "Hyperparams",
    "LossTrace",
    "NetSpec",
    "TrainResult",
    "accuracy",
    "adam_step",
    "backward",
    "conv2d_forward",
    "cross_entropy",
    "dense_forward",
    "dropout_forward",
    "forward",
    "init_params",
    "l2_penalty",
    "loss",
    "predict",
    "relu",
    "softmax",
    "train",
]
