"""Static SVG figures rendered purely from the CSV outputs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import (  # noqa: E402
    CONFUSION_CSV,
    CROSS_EVAL_CSV,
    EPSILON_CSV,
    LOSS_CSV,
    PER_SNR_CSV,
    SNR_ATTACK_CSV,
    SWEEP_CSV,
    read_confusion_csv,
    read_csv_columns,
)

_RC = {"svg.hashsalt": "modrec", "svg.fonttype": "none"}


def _save(fig, path) -> Path:
    with plt.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def plot_confusion(csv_path, out_path) -> Path:
    cm = read_confusion_csv(csv_path)
    rows = cm.counts.sum(axis=1, keepdims=True)
    norm = cm.counts / np.maximum(rows, 1)
    fig, ax = plt.subplots(figsize=(7, 6))
    im = ax.imshow(norm, cmap="Blues", vmin=0, vmax=1)
    ax.set_xticks(range(len(cm.labels)), cm.labels, rotation=45, ha="right")
    ax.set_yticks(range(len(cm.labels)), cm.labels)
    ax.set_xlabel("Predicted label")
    ax.set_ylabel("True label")
    ax.set_title(f"Confusion matrix (accuracy {cm.accuracy:.3f})")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    return _save(fig, out_path)


def _line(x, ys, labels, xlabel, ylabel, title, out_path, marker="o") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for y, label in zip(ys, labels):
        ax.plot(x, y, marker=marker, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(ys) > 1:
        ax.legend()
    fig.tight_layout()
    return _save(fig, out_path)


def plot_per_snr(csv_path, out_path) -> Path:
    c = read_csv_columns(csv_path)
    return _line([float(v) for v in c["snr_db"]], [[float(v) for v in c["accuracy"]]], ["accuracy"],
                 "SNR (dB)", "Accuracy", "Accuracy vs SNR", out_path)


def plot_epsilon(csv_path, out_path) -> Path:
    c = read_csv_columns(csv_path)
    return _line([float(v) for v in c["epsilon"]], [[float(v) for v in c["accuracy"]]], ["adversarial"],
                 "epsilon", "Accuracy", "Accuracy vs epsilon", out_path)


def plot_snr_attack(csv_path, out_path) -> Path:
    c = read_csv_columns(csv_path)
    x = [float(v) for v in c["snr_db"]]
    ys = [[float(v) for v in c["clean_accuracy"]], [float(v) for v in c["adversarial_accuracy"]]]
    return _line(x, ys, ["legitimate", "adversarial"], "SNR (dB)", "Accuracy",
                 "Legitimate vs adversarial accuracy", out_path)


def plot_loss(csv_path, out_path) -> Path:
    c = read_csv_columns(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([int(v) for v in c["batch"]], [float(v) for v in c["train_loss"]], lw=0.8, label="train")
    val = [(int(b), float(v)) for b, v in zip(c["batch"], c["val_loss"]) if v]
    if val:
        ax.plot(*zip(*val), marker="o", label="validation")
    ax.set_xlabel("Batch")
    ax.set_ylabel("Cross-entropy")
    ax.set_title("Loss per batch")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_path)


def plot_sweep(csv_path, out_path) -> Path:
    c = read_csv_columns(csv_path)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter([float(v) for v in c["train_accuracy"]], [float(v) for v in c["val_accuracy"]], s=14)
    sel = [i for i, s in enumerate(c["selected"]) if s == "1"]
    for i in sel:
        ax.scatter(float(c["train_accuracy"][i]), float(c["val_accuracy"][i]), s=60, marker="*", color="red")
    ax.plot([0, 1], [0, 1], "k--", lw=0.5)
    ax.set_xlabel("Training accuracy")
    ax.set_ylabel("Validation accuracy")
    ax.set_title(f"Hyperparameter sweep ({len(c['run'])} runs)")
    fig.tight_layout()
    return _save(fig, out_path)


def plot_cross_eval(csv_path, out_path) -> Path:
    c = read_csv_columns(csv_path)
    labels = [f"{a}\n-> {b}" for a, b in zip(c["train"], c["test"])]
    fig, ax = plt.subplots(figsize=(max(5, 1.1 * len(labels)), 4))
    ax.bar(range(len(labels)), [float(v) for v in c["accuracy"]])
    ax.set_xticks(range(len(labels)), labels, fontsize=7)
    ax.set_ylim(0, 1)
    ax.set_ylabel("Accuracy")
    ax.set_title("Train -> test channel")
    fig.tight_layout()
    return _save(fig, out_path)


RENDERERS = {
    CONFUSION_CSV: plot_confusion,
    PER_SNR_CSV: plot_per_snr,
    EPSILON_CSV: plot_epsilon,
    SNR_ATTACK_CSV: plot_snr_attack,
    LOSS_CSV: plot_loss,
    SWEEP_CSV: plot_sweep,
    CROSS_EVAL_CSV: plot_cross_eval,
}


def render_directory(directory) -> list[Path]:
    """Render an SVG next to every recognized CSV in ``directory``.

    A CSV is recognized by its name ending in one of the standard file names,
    so ``model.loss_trace.csv`` renders as a loss plot.
    """
    d = Path(directory)
    out = []
    for csv_path in sorted(d.glob("*.csv")):
        for name, fn in RENDERERS.items():
            if csv_path.name == name or csv_path.name.endswith("." + name):
                out.append(fn(csv_path, csv_path.with_suffix(".svg")))
                break
    return out
