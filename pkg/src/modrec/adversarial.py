"""Fast-gradient-sign perturbations and the robustness curves built on them.

Attack gradients are taken in infer mode (dropout off), so attacks are
deterministic. Perturbed frames are not clipped: I/Q samples are unbounded.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .nn.network import NetSpec, as_batch, backward_from_cache, forward, predict

DEFAULT_EPSILON_GRID = (0.0, 0.01, 0.02, 0.05, 0.1)


@dataclass(frozen=True)
class AttackConfig:
    epsilon: float = 0.05
    epsilon_grid: tuple[float, ...] = DEFAULT_EPSILON_GRID

    def __post_init__(self):
        object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))
        if not self.epsilon >= 0:
            raise ConfigError("epsilon must be >= 0")
        g = self.epsilon_grid
        if not g:
            raise ConfigError("epsilon_grid is empty")
        if any(e < 0 for e in g) or any(b <= a for a, b in zip(g, g[1:])):
            raise ConfigError("epsilon_grid must be nonnegative and strictly ascending")


@dataclass
class AdversarialExample:
    x: np.ndarray  # [1, 2, L]
    x_adv: np.ndarray
    eta: np.ndarray
    label: int
    clean_pred: int
    clean_confidence: float
    adv_pred: int
    adv_confidence: float

    @property
    def flipped(self) -> bool:
        return self.clean_pred != self.adv_pred


@dataclass
class AdversarialBatch:
    x: np.ndarray  # [N, 1, 2, L]
    x_adv: np.ndarray
    eta: np.ndarray
    labels: np.ndarray
    clean_probs: np.ndarray
    adv_probs: np.ndarray
    epsilon: float

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> AdversarialExample:
        return AdversarialExample(
            self.x[i], self.x_adv[i], self.eta[i], int(self.labels[i]),
            int(self.clean_probs[i].argmax()), float(self.clean_probs[i].max()),
            int(self.adv_probs[i].argmax()), float(self.adv_probs[i].max()),
        )

    @property
    def clean_accuracy(self) -> float:
        return float(np.mean(self.clean_probs.argmax(1) == self.labels))

    @property
    def adversarial_accuracy(self) -> float:
        return float(np.mean(self.adv_probs.argmax(1) == self.labels))


def input_gradient(spec: NetSpec, params: dict, x, y, batch_size: int = 256) -> np.ndarray:
    """Per-frame gradient of the cross-entropy w.r.t. the input, infer mode."""
    x = as_batch(spec, x, params["conv1_w"].dtype)
    y = np.atleast_1d(np.asarray(y, dtype=np.intp))
    if len(y) != len(x):
        raise ConfigError("label count does not match frame count")
    out = np.empty_like(x)
    for i in range(0, len(x), batch_size):
        probs, cache = forward(spec, params, x[i:i + batch_size])
        out[i:i + batch_size] = backward_from_cache(spec, params, probs, cache, y[i:i + batch_size],
                                                    reduction="sum").input_grad
    return out


def _perturb(x, grad, epsilon):
    eta = x.dtype.type(epsilon) * np.sign(grad)
    eta[eta == 0] = 0  # no negative zeros: sign(0) contributes nothing
    return x + eta, eta


def fgsm_batch(spec: NetSpec, params: dict, x, y, epsilon: float, grad=None) -> AdversarialBatch:
    if not epsilon >= 0:
        raise ConfigError("epsilon must be >= 0")
    x = as_batch(spec, x, params["conv1_w"].dtype)
    y = np.atleast_1d(np.asarray(y, dtype=np.intp))
    if grad is None:
        grad = input_gradient(spec, params, x, y)
    x_adv, eta = _perturb(x, grad, epsilon)
    return AdversarialBatch(x, x_adv, eta, y, predict(spec, params, x), predict(spec, params, x_adv), float(epsilon))


def fgsm(spec: NetSpec, params: dict, x, y: int, epsilon: float) -> AdversarialExample:
    """Single-frame attack: ``x_adv = x + epsilon * sign(grad_x loss)``."""
    return fgsm_batch(spec, params, x, [y], epsilon)[0]


@dataclass(frozen=True)
class EpsilonRow:
    epsilon: float
    accuracy: float
    count: int


def epsilon_sweep(spec: NetSpec, params: dict, frames, grid=DEFAULT_EPSILON_GRID) -> list[EpsilonRow]:
    """Adversarial accuracy at each epsilon; the input gradient is computed once and reused."""
    x, y = _xy(frames)
    grid = AttackConfig(epsilon_grid=tuple(grid)).epsilon_grid
    x = as_batch(spec, x, params["conv1_w"].dtype)
    grad = input_gradient(spec, params, x, y)
    rows = []
    for eps in grid:
        x_adv, _ = _perturb(x, grad, eps)
        acc = float(np.mean(predict(spec, params, x_adv).argmax(1) == y))
        rows.append(EpsilonRow(eps, acc, len(y)))
    return rows


@dataclass(frozen=True)
class SnrAttackRow:
    snr_db: float
    count: int
    clean_accuracy: float
    adversarial_accuracy: float


def accuracy_vs_snr_adversarial(spec: NetSpec, params: dict, frames, epsilon: float) -> list[SnrAttackRow]:
    batch = fgsm_batch(spec, params, frames.tensors(), frames.class_ids, epsilon)
    clean_ok = batch.clean_probs.argmax(1) == batch.labels
    adv_ok = batch.adv_probs.argmax(1) == batch.labels
    rows = []
    for snr in np.unique(frames.snr_db):
        sel = frames.snr_db == snr
        if sel.any():
            rows.append(SnrAttackRow(float(snr), int(sel.sum()), float(clean_ok[sel].mean()), float(adv_ok[sel].mean())))
    return rows


@dataclass
class ConfidenceReport:
    rows: list[dict]  # one per example: index, label, clean/adv prediction, adv confidence, flipped
    bins: np.ndarray
    hist_flipped: np.ndarray
    hist_unflipped: np.ndarray
    mean_flipped: float | None
    mean_unflipped: float | None
    mean_misclassified: float | None
    counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "bins": self.bins.tolist(),
            "hist_flipped": self.hist_flipped.tolist(),
            "hist_unflipped": self.hist_unflipped.tolist(),
            "mean_flipped": self.mean_flipped,
            "mean_unflipped": self.mean_unflipped,
            "mean_misclassified": self.mean_misclassified,
            "counts": self.counts,
        }


def _mean_or_none(a):
    return float(np.mean(a)) if len(a) else None


def confidence_report(batch: AdversarialBatch, n_bins: int = 10) -> ConfidenceReport:
    """Max-softmax confidence of adversarial predictions, split by whether the attack flipped the label."""
    if len(batch) == 0:
        raise ConfigError("no examples to summarize")
    k = batch.adv_probs.shape[1]
    conf = batch.adv_probs.max(1).astype(np.float64)
    adv_pred = batch.adv_probs.argmax(1)
    flipped = batch.clean_probs.argmax(1) != adv_pred
    wrong = adv_pred != batch.labels
    bins = np.linspace(1.0 / k, 1.0, n_bins + 1)
    binned = np.clip(conf, bins[0], bins[-1])  # float32 softmax can land a hair under 1/k
    rows = [
        {
            "index": i,
            "label": int(batch.labels[i]),
            "clean_pred": int(batch.clean_probs[i].argmax()),
            "adv_pred": int(adv_pred[i]),
            "adv_confidence": float(conf[i]),
            "flipped": bool(flipped[i]),
        }
        for i in range(len(batch))
    ]
    return ConfidenceReport(
        rows=rows,
        bins=bins,
        hist_flipped=np.histogram(binned[flipped], bins)[0],
        hist_unflipped=np.histogram(binned[~flipped], bins)[0],
        mean_flipped=_mean_or_none(conf[flipped]),
        mean_unflipped=_mean_or_none(conf[~flipped]),
        mean_misclassified=_mean_or_none(conf[wrong]),
        counts={"total": len(batch), "flipped": int(flipped.sum()), "misclassified": int(wrong.sum())},
    )


def _xy(frames):
    if hasattr(frames, "tensors"):
        x, y = frames.tensors(), np.asarray(frames.class_ids, dtype=np.intp)
    else:
        x, y = frames
        y = np.asarray(y, dtype=np.intp)
    if len(y) == 0:
        raise ConfigError("test set is empty")
    return x, y
