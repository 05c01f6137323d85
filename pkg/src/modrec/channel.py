"""Two-path specular multipath: a direct path plus one delayed, complex-scaled echo.

Bursts enter at 144 samples and leave truncated to 128; history before the
burst start is zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, ShapeError
from .sigsynth import (
    BURST_LEN,
    FRAME_LEN,
    BurstSet,
    ChannelTag,
    FrameSet,
    add_awgn,
    clean_rms,
    frame_rng,
)

SPECULAR_GAIN = complex(0.2781, 0.856)
ISI_SCALES = (0.25, 0.5, 1.0)


@dataclass(frozen=True)
class TwoPathConfig:
    scale: float = 1.0
    delay: int = 8
    delay_range: tuple[int, int] = (1, 8)  # inclusive, used by the random variant
    gain: complex = SPECULAR_GAIN

    def __post_init__(self):
        object.__setattr__(self, "delay_range", tuple(int(d) for d in self.delay_range))
        object.__setattr__(self, "gain", complex(self.gain))
        if not self.scale >= 0:
            raise ConfigError("scale must be >= 0")
        if not np.isfinite(self.gain):
            raise ConfigError("gain must be finite")
        if not 1 <= self.delay < BURST_LEN:
            raise ConfigError(f"delay must lie in [1, {BURST_LEN - 1}]")
        lo, hi = self.delay_range
        if lo > hi:
            raise ConfigError("delay_range is empty")
        if lo < 1 or hi >= BURST_LEN:
            raise ConfigError(f"delay_range must lie within [1, {BURST_LEN - 1}]")

    @property
    def coefficient(self) -> complex:
        return self.scale * self.gain


@dataclass(frozen=True)
class ChannelTruth:
    applied_delay: int
    applied_scale: float
    channel_tag: ChannelTag


@dataclass(frozen=True)
class ChannelRecipe:
    """How a dataset's frames were impaired: ``awgn``, ``fixed`` or ``random``."""

    kind: str = "awgn"
    path: TwoPathConfig = field(default_factory=TwoPathConfig)

    def __post_init__(self):
        if self.kind not in ("awgn", "fixed", "random"):
            raise ConfigError(f"unknown channel kind {self.kind!r}")

    @property
    def tag(self) -> str:
        if self.kind == "awgn":
            return "awgn"
        if self.kind == "fixed":
            return f"two_path_fixed(scale={self.path.scale:g},delay={self.path.delay})"
        lo, hi = self.path.delay_range
        return f"two_path_random(scale={self.path.scale:g},delay={lo}..{hi})"


def _check_burst(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1] != BURST_LEN:
        raise ShapeError(f"expected {BURST_LEN}-sample bursts, got {x.shape}")
    return x


def two_path_batch(bursts: np.ndarray, delay: int, coefficient: complex) -> np.ndarray:
    """Apply one delay/coefficient to every row of ``bursts`` [N, 144] -> complex128 [N, 128]."""
    b = _check_burst(bursts).reshape(-1, BURST_LEN)
    xr = np.ascontiguousarray(b.real, dtype=np.float64)
    xi = np.ascontiguousarray(b.imag, dtype=np.float64)
    c = complex(coefficient)
    yr, yi = kernels.two_path(xr, xi, int(delay), c.real, c.imag, FRAME_LEN)
    return yr + 1j * yi


def apply_two_path_fixed(x: np.ndarray, cfg: TwoPathConfig) -> np.ndarray:
    x = _check_burst(x)
    if x.ndim != 1:
        raise ShapeError("apply_two_path_fixed takes a single burst")
    return two_path_batch(x, cfg.delay, cfg.coefficient)[0]


def draw_delay(cfg: TwoPathConfig, rng: np.random.Generator) -> int:
    lo, hi = cfg.delay_range
    return int(rng.integers(lo, hi + 1))


def apply_two_path_random(x: np.ndarray, cfg: TwoPathConfig, rng: np.random.Generator):
    x = _check_burst(x)
    if x.ndim != 1:
        raise ShapeError("apply_two_path_random takes a single burst")
    d = draw_delay(cfg, rng)
    y = two_path_batch(x, d, cfg.coefficient)[0]
    return y, ChannelTruth(d, cfg.scale, ChannelTag.TWO_PATH_RANDOM)


def derive_isi_dataset(bursts: BurstSet, recipe: ChannelRecipe) -> FrameSet:
    """Pass every burst through the two-path channel, then add noise at its nominal SNR."""
    if recipe.kind == "awgn":
        raise ConfigError("derive_isi_dataset needs a two-path recipe")
    n = len(bursts)
    if n == 0:
        return FrameSet.empty()
    cfg = recipe.path
    seed = bursts.master_seed
    coords = list(zip(bursts.class_ids, bursts.snr_db, bursts.index))
    if recipe.kind == "fixed":
        delays = np.full(n, cfg.delay, dtype=np.int64)
        tag = ChannelTag.TWO_PATH_FIXED
    else:
        delays = np.array([draw_delay(cfg, frame_rng(seed, c, s, i, 1)) for c, s, i in coords])
        tag = ChannelTag.TWO_PATH_RANDOM
    clean = np.empty((n, FRAME_LEN), dtype=np.complex128)
    for d in np.unique(delays):
        rows = np.flatnonzero(delays == d)
        clean[rows] = two_path_batch(bursts.samples[rows], int(d), cfg.coefficient)
    iq = np.empty((n, FRAME_LEN), dtype=np.complex64)
    rms = np.empty(n, dtype=np.float32)
    for k, (c, s, i) in enumerate(coords):
        iq[k] = add_awgn(clean[k], s, frame_rng(seed, c, s, i, 2))
        rms[k] = clean_rms(bursts.samples[k])
    return FrameSet(
        iq=iq,
        class_ids=bursts.class_ids,
        snr_db=bursts.snr_db,
        channel_tag=np.full(n, int(tag)),
        path_scale=np.full(n, cfg.scale),
        path_delay=delays,
        clean_rms=rms,
    )
