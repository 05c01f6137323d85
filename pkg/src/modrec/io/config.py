"""Run configuration: flat ``key = value`` text or JSON, validated up front.

Command-line flags use the same key names and override file values.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..adversarial import DEFAULT_EPSILON_GRID, AttackConfig
from ..channel import ChannelRecipe, TwoPathConfig
from ..errors import ConfigError
from ..evaluation import SCALING_MODES, SplitConfig, SweepSpace
from ..nn.training import Hyperparams
from ..sigsynth import GenConfig, ModClass


def _floats(v):
    if isinstance(v, str):
        v = [p for p in v.replace(",", " ").split() if p]
    return tuple(float(x) for x in v)


def _ints(v):
    return tuple(int(float(x)) for x in _floats(v))


def _classes(v):
    if isinstance(v, str):
        if v.strip().lower() == "all":
            return tuple(ModClass)
        v = [p for p in v.split(",") if p.strip()]
    return tuple(ModClass.from_label(c) if isinstance(c, str) else ModClass(c) for c in v)


@dataclass
class RunConfig:
    # generation
    classes: tuple = tuple(ModClass)
    snr_min: float = -20.0
    snr_max: float = 18.0
    snr_step: float = 2.0
    frames: int = 1000
    sps: int = 8
    rolloff: float = 0.35
    seed: int = 0
    workers: int = 1
    # channel
    channel: str = "awgn"
    scale: float = 1.0
    delay: int = 8
    delay_min: int = 1
    delay_max: int = 8
    # model / training
    conv1_filters: int = 64
    conv2_filters: int = 16
    dense_units: int = 128
    learning_rate: float = 1e-3
    l2_coefficient: float = 1e-4
    dropout_rate: float = 0.6
    batch_size: int = 64
    epochs: int = 10
    # split
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    snr_floor: float = -4.0
    split_seed: int = 0
    # attack
    eps: float = 0.05
    eps_grid: tuple = DEFAULT_EPSILON_GRID
    # sweep
    budget: int = 80
    sweep_conv1: tuple = (32, 64, 128)
    sweep_conv2: tuple = (8, 16, 32)
    sweep_dense: tuple = (64, 128, 256)
    sweep_lr: tuple = (3e-4, 1e-3, 3e-3)
    sweep_l2: tuple = (0.0, 1e-4, 1e-3)
    # misc
    scaling: str = "none"
    out: str = "."

    _COERCE = {
        "classes": _classes,
        "eps_grid": _floats,
        "sweep_conv1": _ints,
        "sweep_conv2": _ints,
        "sweep_dense": _ints,
        "sweep_lr": _floats,
        "sweep_l2": _floats,
    }

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        unknown = sorted(set(values) - set(cls.keys()))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            try:
                if key in cls._COERCE:
                    kwargs[key] = cls._COERCE[key](raw)
                elif types[key] == "int":
                    kwargs[key] = int(raw) if not isinstance(raw, float) or raw.is_integer() else _bad(key, raw)
                elif types[key] == "float":
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = str(raw)
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Build every derived config so all errors surface before any work starts."""
        self.gen_config()
        self.recipe()
        self.hyper()
        self.split_config()
        self.attack()
        self.sweep_space()
        if self.scaling not in SCALING_MODES:
            raise ConfigError(f"scaling must be one of {SCALING_MODES}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def snr_grid(self) -> tuple[float, ...]:
        if self.snr_step <= 0:
            raise ConfigError("snr_step must be positive")
        if self.snr_max < self.snr_min:
            raise ConfigError("snr_max is below snr_min")
        n = int(np.floor((self.snr_max - self.snr_min) / self.snr_step + 1e-9)) + 1
        return tuple(round(self.snr_min + k * self.snr_step, 2) for k in range(n))

    def gen_config(self) -> GenConfig:
        return GenConfig(samples_per_symbol=self.sps, rrc_rolloff=self.rolloff, snr_grid_db=self.snr_grid(),
                         frames_per_combo=self.frames, master_seed=self.seed, classes=self.classes)

    def recipe(self) -> ChannelRecipe:
        path = TwoPathConfig(scale=self.scale, delay=self.delay, delay_range=(self.delay_min, self.delay_max))
        return ChannelRecipe(self.channel, path)

    def hyper(self) -> Hyperparams:
        return Hyperparams(self.conv1_filters, self.conv2_filters, self.dense_units, self.learning_rate,
                           self.l2_coefficient, self.dropout_rate, self.batch_size, self.epochs)

    def split_config(self) -> SplitConfig:
        return SplitConfig(self.train_frac, self.val_frac, self.test_frac, self.snr_floor, self.split_seed)

    def attack(self) -> AttackConfig:
        return AttackConfig(self.eps, self.eps_grid)

    def sweep_space(self) -> SweepSpace:
        return SweepSpace(self.sweep_conv1, self.sweep_conv2, self.sweep_dense, self.sweep_lr, self.sweep_l2,
                          self.budget)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classes"] = [ModClass(c).label for c in self.classes]
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


def _bad(key, raw):
    raise ConfigError(f"{key} must be an integer, got {raw!r}")


def parse_config_text(text: str) -> dict:
    """JSON object, or one ``key = value`` per line (``#`` starts a comment)."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        return data
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        values[key] = value
    return values


def load_config_file(path: str | os.PathLike) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def resolve(file_values: dict | None, overrides: dict | None) -> RunConfig:
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_mapping(merged)
