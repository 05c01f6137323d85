"""Mini-batch training with Adam, seeded end to end."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError
from . import layers
from .adam import AdamState, adam_step
from .network import NetSpec, backward, init_params, predict

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hyperparams:
    conv1_filters: int = 64
    conv2_filters: int = 16
    dense_units: int = 128
    learning_rate: float = 1e-3
    l2_coefficient: float = 1e-4
    dropout_rate: float = 0.6
    batch_size: int = 64
    epochs: int = 10

    def __post_init__(self):
        for name in ("conv1_filters", "conv2_filters", "dense_units", "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.learning_rate < 0 or self.l2_coefficient < 0:
            raise ConfigError("learning_rate and l2_coefficient must be nonnegative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")

    def net_spec(self, class_count: int = 11, frame_len: int = 128) -> NetSpec:
        return NetSpec(
            conv1_filters=self.conv1_filters,
            conv2_filters=self.conv2_filters,
            dense_units=self.dense_units,
            class_count=class_count,
            dropout_rate=self.dropout_rate,
            frame_len=frame_len,
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LossTrace:
    train: list[float] = field(default_factory=list)  # one entry per batch
    val: list[tuple[int, float]] = field(default_factory=list)  # (batch index, loss) per epoch


@dataclass
class TrainResult:
    spec: NetSpec
    params: dict[str, np.ndarray]
    trace: LossTrace


def as_xy(data):
    """Accept a FrameSet or an ``(x, y)`` pair and return float32 tensors and int labels."""
    if hasattr(data, "tensors"):
        return data.tensors(), np.asarray(data.class_ids, dtype=np.intp)
    x, y = data
    return np.asarray(x, dtype=np.float32), np.asarray(y, dtype=np.intp)


def evaluate_loss(spec: NetSpec, params: dict, x, y, l2_coefficient: float, batch_size: int = 512) -> float:
    probs = predict(spec, params, x, batch_size)
    return layers.loss(probs, y, params, l2_coefficient)


def train(spec: NetSpec, hyper: Hyperparams, train_set, val_set=None, seed: int = 0,
          params: dict | None = None) -> TrainResult:
    """Train from a seeded initialization; every random draw derives from ``seed``."""
    x, y = as_xy(train_set)
    if len(y) == 0:
        raise ConfigError("training set is empty")
    xv, yv = as_xy(val_set) if val_set is not None else (None, None)
    if xv is not None and len(yv) == 0:
        raise ConfigError("validation set is empty")
    init_seq, order_seq, drop_seq = np.random.SeedSequence(seed).spawn(3)
    if params is None:
        params = init_params(spec, int(init_seq.generate_state(1)[0]))
    order_rng = np.random.default_rng(order_seq)
    drop_rng = np.random.default_rng(drop_seq)
    state = AdamState.fresh(params, hyper.learning_rate)
    trace = LossTrace()
    mode = "train" if spec.dropout_rate > 0 else "infer"
    n = len(y)
    n_batches = -(-n // hyper.batch_size)
    for epoch in range(hyper.epochs):
        perm = order_rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            idx = perm[start:start + hyper.batch_size]
            res = backward(spec, params, x[idx], y[idx], mode, drop_rng, hyper.l2_coefficient)
            trace.train.append(res.loss)
            adam_step(params, res.grads, state)
        if xv is not None:
            trace.val.append((len(trace.train) - 1, evaluate_loss(spec, params, xv, yv, hyper.l2_coefficient)))
        log.info("epoch %d/%d train loss %.4f", epoch + 1, hyper.epochs, np.mean(trace.train[-n_batches:]))
    return TrainResult(spec, params, trace)


def accuracy(spec: NetSpec, params: dict, data) -> float:
    x, y = as_xy(data)
    if len(y) == 0:
        raise ConfigError("cannot score an empty set")
    return float(np.mean(predict(spec, params, x).argmax(axis=1) == y))
