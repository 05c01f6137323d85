"""The fixed classifier topology and its forward/backward passes.

Layer order: conv -> relu -> dropout -> conv -> relu -> dropout -> dense ->
relu -> dropout -> dense -> softmax. Input frames are one-channel 2 x 128
images (I row, Q row).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ShapeError
from . import layers

PARAM_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense1_w", "dense1_b", "dense2_w", "dense2_b")


@dataclass(frozen=True)
class NetSpec:
    conv1_filters: int = 64
    conv2_filters: int = 16
    dense_units: int = 128
    class_count: int = 11
    dropout_rate: float = 0.6
    frame_len: int = 128
    conv1_kernel: tuple[int, int] = (1, 3)
    conv2_kernel: tuple[int, int] = (2, 3)

    def __post_init__(self):
        object.__setattr__(self, "conv1_kernel", tuple(self.conv1_kernel))
        object.__setattr__(self, "conv2_kernel", tuple(self.conv2_kernel))
        for name in ("conv1_filters", "conv2_filters", "dense_units", "class_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        h, w = self.conv2_out_hw
        if h < 1 or w < 1:
            raise ValueError("frame too small for the kernels")

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return (1, 2, self.frame_len)

    @property
    def conv1_out_hw(self) -> tuple[int, int]:
        kh, kw = self.conv1_kernel
        return 2 - kh + 1, self.frame_len - kw + 1

    @property
    def conv2_out_hw(self) -> tuple[int, int]:
        h, w = self.conv1_out_hw
        kh, kw = self.conv2_kernel
        return h - kh + 1, w - kw + 1

    @property
    def flat_features(self) -> int:
        h, w = self.conv2_out_hw
        return self.conv2_filters * h * w

    def layers(self) -> tuple[tuple, ...]:
        r = self.dropout_rate
        return (
            ("conv", self.conv1_filters, *self.conv1_kernel),
            ("relu",),
            ("dropout", r),
            ("conv", self.conv2_filters, *self.conv2_kernel),
            ("relu",),
            ("dropout", r),
            ("dense", self.dense_units),
            ("relu",),
            ("dropout", r),
            ("dense", self.class_count),
            ("softmax",),
        )

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        k1, k2 = self.conv1_filters, self.conv2_filters
        return {
            "conv1_w": (k1, 1, *self.conv1_kernel),
            "conv1_b": (k1,),
            "conv2_w": (k2, k1, *self.conv2_kernel),
            "conv2_b": (k2,),
            "dense1_w": (self.dense_units, self.flat_features),
            "dense1_b": (self.dense_units,),
            "dense2_w": (self.class_count, self.dense_units),
            "dense2_b": (self.class_count,),
        }

    def param_count(self) -> int:
        return sum(math.prod(s) for s in self.param_shapes().values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv1_kernel"] = list(self.conv1_kernel)
        d["conv2_kernel"] = list(self.conv2_kernel)
        return d


def glorot_uniform(shape, rng, dtype=np.float32):
    k, c, kh, kw = shape
    limit = math.sqrt(6.0 / (c * kh * kw + k * kh * kw))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def he_normal(shape, rng, dtype=np.float32):
    fan_in = shape[1]
    return (rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)).astype(dtype)


def init_params(spec: NetSpec, seed: int, dtype=np.float32) -> dict[str, np.ndarray]:
    """Glorot-uniform conv kernels, He-normal dense weights, zero biases."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in spec.param_shapes().items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape, dtype=dtype)
        elif name.startswith("conv"):
            params[name] = glorot_uniform(shape, rng, dtype)
        else:
            params[name] = he_normal(shape, rng, dtype)
    return params


def check_params(spec: NetSpec, params: dict) -> None:
    expected = spec.param_shapes()
    if set(params) != set(expected):
        raise ShapeError(f"parameter names {sorted(params)} do not match the network layout")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ShapeError(f"{name}: expected {shape}, got {params[name].shape}")


def as_batch(spec: NetSpec, x, dtype) -> np.ndarray:
    """Accept [2, L], [1, 2, L] or [N, 1, 2, L] and return a contiguous batch."""
    x = np.asarray(x, dtype=dtype)
    if x.shape == (2, spec.frame_len):
        x = x[None, None]
    elif x.shape == spec.input_shape:
        x = x[None]
    if x.ndim != 4 or x.shape[1:] != spec.input_shape:
        raise ShapeError(f"input must be [N, 1, 2, {spec.frame_len}], got {x.shape}")
    return np.ascontiguousarray(x)


def forward(spec: NetSpec, params: dict, x, mode: str = "infer", rng=None):
    """Return ``(probs, cache)`` for a batch; ``cache`` feeds :func:`backward_from_cache`."""
    dtype = params["conv1_w"].dtype
    x = as_batch(spec, x, dtype)
    r = spec.dropout_rate
    c1, cols1 = layers.conv2d_forward_cached(x, params["conv1_w"], params["conv1_b"])
    a1 = layers.relu(c1)
    d1, m1 = layers.dropout_forward(a1, r, mode, rng)
    c2, cols2 = layers.conv2d_forward_cached(d1, params["conv2_w"], params["conv2_b"])
    a2 = layers.relu(c2)
    d2, m2 = layers.dropout_forward(a2, r, mode, rng)
    flat = d2.reshape(len(x), -1)
    h = layers.dense_forward(flat, params["dense1_w"], params["dense1_b"])
    a3 = layers.relu(h)
    d3, m3 = layers.dropout_forward(a3, r, mode, rng)
    logits = layers.dense_forward(d3, params["dense2_w"], params["dense2_b"])
    probs = layers.softmax(logits)
    cache = dict(x=x, c1=c1, cols1=cols1, m1=m1, d1=d1, c2=c2, cols2=cols2, m2=m2,
                 d2_shape=d2.shape, flat=flat, h=h, m3=m3, d3=d3)
    return probs, cache


@dataclass
class BackwardResult:
    grads: dict[str, np.ndarray]
    input_grad: np.ndarray  # same shape as the batched input
    loss: float
    probs: np.ndarray


def backward_from_cache(spec: NetSpec, params: dict, probs, cache, y, l2_coefficient: float = 0.0,
                        reduction: str = "mean") -> BackwardResult:
    """Reverse pass. ``reduction="sum"`` differentiates the summed per-frame loss,
    so each frame's input gradient is its own, unscaled by the batch size."""
    y = np.atleast_1d(np.asarray(y, dtype=np.intp))
    n = len(y)
    if probs.shape[0] != n:
        raise ShapeError("label count does not match batch size")
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1
    if reduction == "mean":
        dlogits /= n
    elif reduction != "sum":
        raise ValueError(f"unknown reduction {reduction!r}")
    g = {}
    dd3, g["dense2_w"], g["dense2_b"] = layers.dense_backward(dlogits, cache["d3"], params["dense2_w"])
    dh = layers.relu_backward(layers.dropout_backward(dd3, cache["m3"]), cache["h"])
    dflat, g["dense1_w"], g["dense1_b"] = layers.dense_backward(dh, cache["flat"], params["dense1_w"])
    dc2 = layers.relu_backward(layers.dropout_backward(dflat.reshape(cache["d2_shape"]), cache["m2"]), cache["c2"])
    dd1, g["conv2_w"], g["conv2_b"] = layers.conv2d_backward(dc2, cache["cols2"], cache["d1"].shape, params["conv2_w"])
    dc1 = layers.relu_backward(layers.dropout_backward(dd1, cache["m1"]), cache["c1"])
    dx, g["conv1_w"], g["conv1_b"] = layers.conv2d_backward(dc1, cache["cols1"], cache["x"].shape, params["conv1_w"])
    if l2_coefficient:
        for name in PARAM_NAMES:
            if name.endswith("_w"):
                g[name] = g[name] + params[name].dtype.type(l2_coefficient) * params[name]
    grads = {name: g[name] for name in PARAM_NAMES}
    value = layers.loss(probs, y, params, l2_coefficient)
    return BackwardResult(grads, dx, value, probs)


def backward(spec: NetSpec, params: dict, x, y, mode: str = "infer", rng=None, l2_coefficient: float = 0.0,
             reduction: str = "mean") -> BackwardResult:
    """Exact gradients of the batch loss w.r.t. every parameter and the input."""
    probs, cache = forward(spec, params, x, mode, rng)
    return backward_from_cache(spec, params, probs, cache, y, l2_coefficient, reduction)


def predict(spec: NetSpec, params: dict, x, batch_size: int = 512) -> np.ndarray:
    """Infer-mode class probabilities, one row per frame."""
    x = as_batch(spec, x, params["conv1_w"].dtype)
    out = [forward(spec, params, x[i:i + batch_size])[0] for i in range(0, len(x), batch_size)]
    if not out:
        return np.zeros((0, spec.class_count), dtype=params["conv1_w"].dtype)
    return np.concatenate(out)
