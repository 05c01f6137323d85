"""Splitting, metrics, cross-training evaluation, hyperparameter sweeps and input scaling."""
from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .channel import ChannelRecipe, TwoPathConfig, derive_isi_dataset
from .errors import ConfigError, ShapeError, SignalError
from .nn.network import predict
from .nn.training import Hyperparams, accuracy, train
from .sigsynth import CLASS_NAMES, FrameSet, GenConfig, awgn_frames, generate_bursts

log = logging.getLogger(__name__)

SCALING_MODES = ("none", "per_frame_rms", "oracle")


# ---------------------------------------------------------------- split


@dataclass(frozen=True)
class SplitConfig:
    train: float = 0.6
    val: float = 0.2
    test: float = 0.2
    snr_floor_db: float = -4.0
    seed: int = 0

    def __post_init__(self):
        fr = (self.train, self.val, self.test)
        if any(f <= 0 for f in fr):
            raise ConfigError("split fractions must be positive")
        if not math.isclose(sum(fr), 1.0, abs_tol=1e-9):
            raise ConfigError(f"split fractions sum to {sum(fr)}, not 1")


@dataclass
class Split:
    train: FrameSet
    val: FrameSet
    test: FrameSet
    excluded: FrameSet  # below the SNR floor; kept for per-SNR evaluation only

    def __iter__(self):
        return iter((self.train, self.val, self.test))


def split_indices(frames: FrameSet, cfg: SplitConfig):
    """Stratified (class, snr) partition of the frames at or above the SNR floor.

    Returns index arrays ``(train, val, test, excluded)``.
    """
    if len(frames) == 0:
        raise ConfigError("cannot split an empty dataset")
    keep = frames.snr_db >= cfg.snr_floor_db
    rng = np.random.default_rng(cfg.seed)
    parts = ([], [], [])
    strata = sorted(set(zip(frames.class_ids[keep].tolist(), frames.snr_db[keep].tolist())))
    for c, s in strata:
        rows = np.flatnonzero(keep & (frames.class_ids == c) & (frames.snr_db == s))
        rows = rows[rng.permutation(len(rows))]
        n_train = int(round(cfg.train * len(rows)))
        n_val = int(round(cfg.val * len(rows)))
        n_val = min(n_val, len(rows) - n_train)
        parts[0].append(rows[:n_train])
        parts[1].append(rows[n_train:n_train + n_val])
        parts[2].append(rows[n_train + n_val:])
    out = [np.sort(np.concatenate(p)) if p else np.zeros(0, dtype=np.intp) for p in parts]
    if len(out[0]) == 0:
        raise ConfigError("no training frames left after applying the SNR floor")
    return out[0], out[1], out[2], np.flatnonzero(~keep)


def split(frames: FrameSet, cfg: SplitConfig = SplitConfig()) -> Split:
    tr, va, te, ex = split_indices(frames, cfg)
    return Split(frames.subset(tr), frames.subset(va), frames.subset(te), frames.subset(ex))


# ---------------------------------------------------------------- metrics


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # [K, K], rows = true class, columns = predicted
    labels: tuple[str, ...] = CLASS_NAMES

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else 0.0

    def per_class_accuracy(self) -> np.ndarray:
        rows = self.counts.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(rows > 0, np.diag(self.counts) / np.maximum(rows, 1), np.nan)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist()}

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.counts, other.counts)

    @classmethod
    def from_dict(cls, d: dict) -> "ConfusionMatrix":
        return cls(np.asarray(d["counts"], dtype=np.int64), tuple(d["labels"]))


def confusion(predictions, labels, class_names: Sequence[str] = CLASS_NAMES) -> ConfusionMatrix:
    predictions = np.asarray(predictions, dtype=np.intp)
    labels = np.asarray(labels, dtype=np.intp)
    if predictions.shape != labels.shape:
        raise ShapeError(f"{len(predictions)} predictions for {len(labels)} labels")
    k = len(class_names)
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (labels, predictions), 1)
    return ConfusionMatrix(counts, tuple(class_names))


@dataclass(frozen=True)
class SnrRow:
    snr_db: float
    count: int
    correct: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.count


def accuracy_by_snr(predictions, frames: FrameSet) -> list[SnrRow]:
    predictions = np.asarray(predictions, dtype=np.intp)
    if len(predictions) != len(frames):
        raise ShapeError("prediction count does not match frame count")
    ok = predictions == frames.class_ids
    return [
        SnrRow(float(s), int((frames.snr_db == s).sum()), int(ok[frames.snr_db == s].sum()))
        for s in np.unique(frames.snr_db)
    ]


# ---------------------------------------------------------------- input scaling


def scale_inputs(frames: FrameSet, mode: str = "none") -> FrameSet:
    """``none`` leaves frames untouched; ``per_frame_rms`` divides each frame by its
    own RMS; ``oracle`` divides by the clean transmit RMS recorded at generation."""
    if mode == "none":
        return frames
    if mode == "per_frame_rms":
        iq = frames.iq.astype(np.complex128)
        rms = np.sqrt(np.mean(np.abs(iq) ** 2, axis=1))
    elif mode == "oracle":
        iq = frames.iq.astype(np.complex128)
        rms = frames.clean_rms.astype(np.float64)
    else:
        raise ConfigError(f"unknown scaling mode {mode!r}; expected one of {SCALING_MODES}")
    if np.any(~(rms > 0)):
        raise SignalError("cannot rescale a frame with zero RMS")
    return frames.replace_iq((iq / rms[:, None]).astype(np.complex64))


# ---------------------------------------------------------------- cross evaluation


@dataclass(frozen=True)
class CrossEvalRow:
    train_tag: str
    test_tag: str
    accuracy: float
    count: int
    train_accuracy: float  # on the model's own training frames; reported only


def table_one_recipes(scale: float = 1.0, delay: int = 8, delay_range=(1, 8)):
    """Train and test recipes for the AWGN / fixed-ISI / random-ISI cross table."""
    path = TwoPathConfig(scale=scale, delay=delay, delay_range=delay_range)
    awgn = ChannelRecipe("awgn")
    fixed = ChannelRecipe("fixed", path)
    rand = ChannelRecipe("random", path)
    train_recipes = {"awgn": awgn, "isi-random": rand}
    test_recipes = {"awgn": awgn, "isi-fixed": fixed, "isi-random": rand}
    return train_recipes, test_recipes


CROSS_PAIRINGS = (("awgn", "awgn"), ("awgn", "isi-fixed"), ("isi-random", "isi-random"), ("isi-random", "isi-fixed"))


def recipe_frames(bursts, recipe: ChannelRecipe) -> FrameSet:
    if recipe.kind == "awgn":
        return awgn_frames(bursts)
    return derive_isi_dataset(bursts, recipe)


def cross_eval(gen_cfg: GenConfig, train_recipes: Mapping[str, ChannelRecipe],
               test_recipes: Mapping[str, ChannelRecipe], hyper: Hyperparams,
               split_cfg: SplitConfig = SplitConfig(), seed: int = 0, scaling: str = "none") -> list[CrossEvalRow]:
    """Train one model per train recipe and score it on every test recipe.

    All recipes are derived from the same clean bursts and share one split, so
    no test burst is ever seen in training under any channel.
    """
    if not test_recipes:
        return []
    bursts = generate_bursts(gen_cfg)
    cache: dict[str, FrameSet] = {}

    def frames_for(name, recipe):
        if name not in cache:
            cache[name] = scale_inputs(recipe_frames(bursts, recipe), scaling)
        return cache[name]

    ref = awgn_frames(bursts)
    tr, va, te, _ = split_indices(ref, split_cfg)
    rows = []
    for j, (train_name, train_recipe) in enumerate(train_recipes.items()):
        data = frames_for("train:" + train_name, train_recipe)
        spec = hyper.net_spec()
        model = train(spec, hyper, data.subset(tr), data.subset(va) if len(va) else None, seed=seed + j)
        train_acc = accuracy(spec, model.params, data.subset(tr))
        for test_name, test_recipe in test_recipes.items():
            test = frames_for("test:" + test_name, test_recipe).subset(te)
            acc = accuracy(spec, model.params, test)
            log.info("%s -> %s: %.3f", train_name, test_name, acc)
            rows.append(CrossEvalRow(train_name, test_name, acc, len(test), train_acc))
    return rows


# ---------------------------------------------------------------- hyperparameter sweep


@dataclass(frozen=True)
class SweepSpace:
    conv1_filters: tuple[int, ...] = (32, 64, 128)
    conv2_filters: tuple[int, ...] = (8, 16, 32)
    dense_units: tuple[int, ...] = (64, 128, 256)
    learning_rate: tuple[float, ...] = (3e-4, 1e-3, 3e-3)
    l2_coefficient: tuple[float, ...] = (0.0, 1e-4, 1e-3)
    budget: int = 80

    AXES = ("conv1_filters", "conv2_filters", "dense_units", "learning_rate", "l2_coefficient")

    def __post_init__(self):
        for axis in self.AXES:
            values = tuple(getattr(self, axis))
            if not values:
                raise ConfigError(f"sweep axis {axis} is empty")
            object.__setattr__(self, axis, values)
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")

    @property
    def size(self) -> int:
        return math.prod(len(getattr(self, a)) for a in self.AXES)

    def combinations(self) -> list[dict]:
        return [dict(zip(self.AXES, combo)) for combo in itertools.product(*(getattr(self, a) for a in self.AXES))]


@dataclass(frozen=True)
class SweepRun:
    index: int
    hyper: Hyperparams
    train_accuracy: float
    val_accuracy: float
    param_count: int


@dataclass
class SweepResult:
    runs: list[SweepRun]
    best: SweepRun = field(init=False)

    def __post_init__(self):
        self.best = select_best(self.runs)


def select_best(runs: Sequence[SweepRun]) -> SweepRun:
    """Highest validation accuracy; ties go to fewer parameters, then the earlier run."""
    if not runs:
        raise ConfigError("no sweep runs to select from")
    return min(runs, key=lambda r: (-r.val_accuracy, r.param_count, r.index))


def sweep_configs(space: SweepSpace, seed: int) -> list[dict]:
    combos = space.combinations()
    if space.budget >= len(combos):
        if space.budget > len(combos):
            warnings.warn(f"budget {space.budget} exceeds {len(combos)} distinct combinations; clamping",
                          stacklevel=3)
        return combos
    pick = np.sort(np.random.default_rng(seed).choice(len(combos), space.budget, replace=False))
    return [combos[i] for i in pick]


def hyperparam_sweep(space: SweepSpace, train_set: FrameSet, val_set: FrameSet, seed: int = 0,
                     base: Hyperparams = Hyperparams()) -> SweepResult:
    configs = sweep_configs(space, seed)
    run_seeds = np.random.SeedSequence(seed).generate_state(len(configs))
    runs = []
    for i, (combo, run_seed) in enumerate(zip(configs, run_seeds)):
        hyper = replace(base, **combo)
        spec = hyper.net_spec()
        model = train(spec, hyper, train_set, None, seed=int(run_seed))
        run = SweepRun(i, hyper, accuracy(spec, model.params, train_set), accuracy(spec, model.params, val_set),
                       spec.param_count())
        log.info("sweep run %d/%d: train %.3f val %.3f", i + 1, len(configs), run.train_accuracy, run.val_accuracy)
        runs.append(run)
    return SweepResult(runs)


def predictions(spec, params, frames: FrameSet) -> np.ndarray:
    return predict(spec, params, frames.tensors()).argmax(axis=1)
