"""Layer primitives with explicit forward/backward passes.

All functions work on batches (leading axis N). Arithmetic happens in the
dtype of the inputs: float32 for training, float64 for gradient checks.
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import ShapeError

PROB_FLOOR = 1e-12


def conv2d_forward_cached(x, w, b):
    """Valid cross-correlation; returns the output and the lowered input for backward."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d expects x[N,C,H,W] and w[K,C,kh,kw], got {x.shape} and {w.shape}")
    n, c, h, wd = x.shape
    k, c2, kh, kw = w.shape
    if c != c2:
        raise ShapeError(f"channel mismatch: input has {c}, kernels expect {c2}")
    if kh > h or kw > wd:
        raise ShapeError(f"kernel {kh}x{kw} larger than input {h}x{wd}")
    if b.shape != (k,):
        raise ShapeError(f"bias must have shape ({k},), got {b.shape}")
    cols = kernels.im2col(x, kh, kw)  # [C*kh*kw, N, Ho, Wo]
    ho, wo = cols.shape[2], cols.shape[3]
    out = w.reshape(k, -1) @ cols.reshape(c * kh * kw, -1)
    out = out.reshape(k, n, ho, wo).transpose(1, 0, 2, 3) + b[None, :, None, None]
    return np.ascontiguousarray(out), cols


def conv2d_forward(x, kernels_, bias):
    """Convolve a single [C,H,W] input or a batch [N,C,H,W]."""
    single = x.ndim == 3
    out, _ = conv2d_forward_cached(x[None] if single else x, kernels_, bias)
    return out[0] if single else out


def conv2d_backward(dout, cols, x_shape, w):
    k, c, kh, kw = w.shape
    d = dout.transpose(1, 0, 2, 3).reshape(k, -1)  # [K, N*Ho*Wo]
    dw = (d @ cols.reshape(c * kh * kw, -1).T).reshape(w.shape)
    db = dout.sum(axis=(0, 2, 3))
    dcols = (w.reshape(k, -1).T @ d).reshape(cols.shape)
    dx = kernels.col2im(dcols, x_shape, kh, kw)
    return dx, dw, db


def dense_forward(x, w, b):
    if w.ndim != 2 or x.shape[-1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ShapeError(f"dense shapes incompatible: x {x.shape}, W {w.shape}, b {b.shape}")
    return x @ w.T + b


def dense_backward(dout, x, w):
    return dout @ w, dout.T @ x, dout.sum(axis=0)


def relu(x):
    return np.maximum(x, 0)


def relu_backward(dout, x):
    return dout * (x > 0)


def dropout_forward(x, rate: float, mode: str = "infer", rng: np.random.Generator | None = None):
    """Inverted dropout. Returns ``(output, mask)``; the mask is None in infer mode."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must lie in [0, 1)")
    if mode == "infer" or rate == 0.0:
        return x, None
    if mode != "train":
        raise ValueError(f"unknown mode {mode!r}")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(keep)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask


def softmax(z):
    z = np.asarray(z)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, y):
    """Mean negative log-likelihood of the true classes, probabilities floored at 1e-12."""
    probs = np.atleast_2d(probs)
    y = np.atleast_1d(np.asarray(y, dtype=np.intp))
    picked = probs[np.arange(len(y)), y]
    return float(np.mean(-np.log(np.maximum(picked.astype(np.float64), PROB_FLOOR))))


def l2_penalty(weights, coefficient: float) -> float:
    """``coefficient / 2 * sum(w**2)`` over the given weight arrays (biases are not passed in)."""
    return 0.5 * coefficient * float(sum(np.sum(np.asarray(w, dtype=np.float64) ** 2) for w in weights))


def loss(probs, y, params, l2_coefficient: float) -> float:
    weights = [v for k, v in params.items() if k.endswith("_w")]
    return cross_entropy(probs, y) + l2_penalty(weights, l2_coefficient)
