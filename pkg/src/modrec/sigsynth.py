"""Baseband I/Q synthesis for the 11 modulation classes plus calibrated AWGN.

Every burst is 144 complex samples at unit average power. Frames handed to the
classifier are 128 samples long; the extra 16 samples feed the delayed path of
the two-path channel.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import signal as sps

from .errors import ClassMismatchError, ConfigError, ShapeError, SignalError

BURST_LEN = 144
FRAME_LEN = 128
SNR_INF = math.inf  # disables noise injection

_MESSAGE_CUTOFF = 0.1  # analog message bandwidth, fraction of sample rate
_MESSAGE_TAPS = 65
_WBFM_DEVIATION = 0.05  # cycles/sample per unit-RMS message
_AM_DEPTH = 0.5
_RRC_SPAN = 10  # symbols
_GAUSS_SPAN = 4


class ModClass(enum.IntEnum):
    BPSK = 0
    QPSK = 1
    PSK8 = 2
    QAM16 = 3
    QAM64 = 4
    PAM4 = 5
    GFSK = 6
    CPFSK = 7
    WBFM = 8
    AM_DSB = 9
    AM_SSB = 10

    @property
    def label(self) -> str:
        return self.name.replace("_", "-")

    @classmethod
    def from_label(cls, label: str) -> "ModClass":
        try:
            return cls[label.strip().upper().replace("-", "_")]
        except KeyError:
            raise ConfigError(f"unknown modulation class {label!r}") from None

    @property
    def is_analog(self) -> bool:
        return self in (ModClass.WBFM, ModClass.AM_DSB, ModClass.AM_SSB)


CLASS_NAMES = tuple(m.label for m in ModClass)
DIGITAL_CLASSES = tuple(m for m in ModClass if not m.is_analog)
ANALOG_CLASSES = tuple(m for m in ModClass if m.is_analog)


class ChannelTag(enum.IntEnum):
    AWGN = 0
    TWO_PATH_FIXED = 1
    TWO_PATH_RANDOM = 2


def default_snr_grid() -> tuple[float, ...]:
    return tuple(float(s) for s in range(-20, 20, 2))


@dataclass(frozen=True)
class GenConfig:
    samples_per_symbol: int = 8
    rrc_rolloff: float = 0.35
    snr_grid_db: tuple[float, ...] = field(default_factory=default_snr_grid)
    frames_per_combo: int = 1000
    master_seed: int = 0
    classes: tuple[ModClass, ...] = tuple(ModClass)
    gfsk_bt: float = 0.35
    fsk_index: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "classes", tuple(ModClass(c) for c in self.classes))
        if self.samples_per_symbol < 2:
            raise ConfigError("samples_per_symbol must be >= 2")
        if not 0.0 <= self.rrc_rolloff <= 1.0:
            raise ConfigError("rrc_rolloff must lie in [0, 1]")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db is empty")
        if any(b <= a for a, b in zip(self.snr_grid_db, self.snr_grid_db[1:])):
            raise ConfigError("snr_grid_db must be strictly increasing")
        if self.frames_per_combo < 1:
            raise ConfigError("frames_per_combo must be >= 1")
        if not self.classes or len(set(self.classes)) != len(self.classes):
            raise ConfigError("classes must be a nonempty list without repeats")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in 64 unsigned bits")


@dataclass
class RawBurst:
    samples: np.ndarray  # complex128, BURST_LEN
    mod_class: ModClass
    seed_tag: tuple = ()

    def __post_init__(self):
        if self.samples.shape != (BURST_LEN,):
            raise ShapeError(f"burst must have {BURST_LEN} samples, got {self.samples.shape}")


@dataclass
class LabeledFrame:
    frame: np.ndarray  # complex64, FRAME_LEN
    mod_class: ModClass
    snr_db: float
    channel_tag: ChannelTag = ChannelTag.AWGN
    path_scale: float = 0.0
    path_delay: int = 0
    clean_rms: float = 1.0

    def __post_init__(self):
        if self.frame.shape != (FRAME_LEN,):
            raise ShapeError(f"frame must have {FRAME_LEN} samples, got {self.frame.shape}")
        if not self.clean_rms > 0:
            raise SignalError("clean_rms must be positive")
        if self.channel_tag == ChannelTag.AWGN and (self.path_scale != 0 or self.path_delay != 0):
            raise ConfigError("AWGN frames carry no specular path")


@dataclass
class FrameSet:
    """Column-oriented collection of labeled frames."""

    iq: np.ndarray  # complex64 [N, FRAME_LEN]
    class_ids: np.ndarray  # int16 [N]
    snr_db: np.ndarray  # float64 [N]
    channel_tag: np.ndarray  # uint8 [N]
    path_scale: np.ndarray  # float32 [N]
    path_delay: np.ndarray  # uint8 [N]
    clean_rms: np.ndarray  # float32 [N]

    _COLUMNS = ("iq", "class_ids", "snr_db", "channel_tag", "path_scale", "path_delay", "clean_rms")
    _DTYPES = (np.complex64, np.int16, np.float64, np.uint8, np.float32, np.uint8, np.float32)

    def __post_init__(self):
        for name, dtype in zip(self._COLUMNS, self._DTYPES):
            setattr(self, name, np.asarray(getattr(self, name), dtype=dtype))
        n = len(self.class_ids)
        if self.iq.ndim != 2 or self.iq.shape != (n, FRAME_LEN):
            if not (n == 0 and self.iq.size == 0):
                raise ShapeError(f"iq must be [{n}, {FRAME_LEN}], got {self.iq.shape}")
            self.iq = self.iq.reshape(0, FRAME_LEN)
        for name in self._COLUMNS[1:]:
            if getattr(self, name).shape != (n,):
                raise ShapeError(f"column {name} has wrong length")

    @classmethod
    def empty(cls) -> "FrameSet":
        return cls(np.zeros((0, FRAME_LEN)), [], [], [], [], [], [])

    @classmethod
    def from_frames(cls, frames: Iterable[LabeledFrame]) -> "FrameSet":
        frames = list(frames)
        if not frames:
            return cls.empty()
        return cls(
            iq=np.stack([f.frame for f in frames]),
            class_ids=[int(f.mod_class) for f in frames],
            snr_db=[f.snr_db for f in frames],
            channel_tag=[int(f.channel_tag) for f in frames],
            path_scale=[f.path_scale for f in frames],
            path_delay=[f.path_delay for f in frames],
            clean_rms=[f.clean_rms for f in frames],
        )

    @classmethod
    def concat(cls, parts: Sequence["FrameSet"]) -> "FrameSet":
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, c) for p in parts]) for c in cls._COLUMNS))

    def __len__(self) -> int:
        return len(self.class_ids)

    def __getitem__(self, i: int) -> LabeledFrame:
        return LabeledFrame(
            frame=self.iq[i].copy(),
            mod_class=ModClass(int(self.class_ids[i])),
            snr_db=float(self.snr_db[i]),
            channel_tag=ChannelTag(int(self.channel_tag[i])),
            path_scale=float(self.path_scale[i]),
            path_delay=int(self.path_delay[i]),
            clean_rms=float(self.clean_rms[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def subset(self, index) -> "FrameSet":
        return FrameSet(*(getattr(self, c)[index] for c in self._COLUMNS))

    def replace_iq(self, iq: np.ndarray) -> "FrameSet":
        cols = [getattr(self, c) for c in self._COLUMNS]
        cols[0] = iq
        return FrameSet(*cols)

    def identical(self, other: "FrameSet") -> bool:
        """Bit-level equality of every column."""
        return all(
            getattr(self, c).shape == getattr(other, c).shape
            and getattr(self, c).tobytes() == getattr(other, c).tobytes()
            for c in self._COLUMNS
        )

    def tensors(self) -> np.ndarray:
        """Classifier input: float32 [N, 1, 2, FRAME_LEN] with I and Q rows."""
        x = np.empty((len(self), 1, 2, FRAME_LEN), dtype=np.float32)
        x[:, 0, 0] = self.iq.real
        x[:, 0, 1] = self.iq.imag
        return x


@dataclass
class BurstSet:
    """Clean bursts plus the (class, snr, index) coordinates that seeded them."""

    samples: np.ndarray  # complex128 [N, BURST_LEN]
    class_ids: np.ndarray
    snr_db: np.ndarray
    index: np.ndarray
    master_seed: int = 0

    def __len__(self) -> int:
        return len(self.class_ids)

    def __getitem__(self, i: int) -> RawBurst:
        tag = (int(self.class_ids[i]), float(self.snr_db[i]), int(self.index[i]))
        return RawBurst(self.samples[i], ModClass(int(self.class_ids[i])), tag)


# ---------------------------------------------------------------- seeding


def _snr_key(snr_db: float) -> int:
    if math.isinf(snr_db):
        return 1 << 30
    return int(round(snr_db * 100)) + (1 << 20)


def frame_rng(master_seed: int, class_id: int, snr_db: float, index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one frame; stream 0 = content, 1 = channel, 2 = noise."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(int(class_id), _snr_key(snr_db), int(index), stream))
    return np.random.Generator(np.random.PCG64(seq))


# ---------------------------------------------------------------- digital


def constellation(mod_class: ModClass) -> np.ndarray:
    """Unit-average-power symbol alphabet, indexed by symbol value."""
    if mod_class == ModClass.BPSK:
        return np.array([1.0, -1.0], dtype=complex)
    if mod_class == ModClass.QPSK:
        return np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / math.sqrt(2)
    if mod_class == ModClass.PSK8:
        return np.exp(2j * np.pi * np.arange(8) / 8)
    if mod_class == ModClass.PAM4:
        return np.array([-3.0, -1.0, 1.0, 3.0], dtype=complex) / math.sqrt(5)
    if mod_class in (ModClass.QAM16, ModClass.QAM64):
        side = 4 if mod_class == ModClass.QAM16 else 8
        levels = np.arange(-(side - 1), side, 2, dtype=float)
        pts = (levels[None, :] + 1j * levels[:, None]).ravel()
        return pts / math.sqrt(2 * (side * side - 1) / 3)  # 10 for QAM16, 42 for QAM64
    raise ClassMismatchError(f"{mod_class.label} has no constellation")


def map_symbols(mod_class: ModClass, symbols) -> np.ndarray:
    return constellation(mod_class)[np.asarray(symbols, dtype=np.intp)]


def rrc_taps(sps_: int, rolloff: float, span: int = _RRC_SPAN) -> np.ndarray:
    """Root-raised-cosine impulse response, unit energy, ``span * sps + 1`` taps."""
    t = np.arange(-span * sps_ / 2, span * sps_ / 2 + 1) / sps_
    h = np.empty_like(t)
    b = rolloff
    for k, tk in enumerate(t):
        if abs(tk) < 1e-12:
            h[k] = 1.0 + b * (4 / np.pi - 1)
        elif b > 0 and abs(abs(tk) - 1 / (4 * b)) < 1e-12:
            h[k] = (b / math.sqrt(2)) * (
                (1 + 2 / np.pi) * math.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * math.cos(np.pi / (4 * b))
            )
        else:
            num = math.sin(np.pi * tk * (1 - b)) + 4 * b * tk * math.cos(np.pi * tk * (1 + b))
            den = np.pi * tk * (1 - (4 * b * tk) ** 2)
            h[k] = num / den
    return h / np.sqrt(np.sum(h**2))


def gaussian_taps(sps_: int, bt: float, span: int = _GAUSS_SPAN) -> np.ndarray:
    t = np.arange(-span * sps_ / 2, span * sps_ / 2 + 1) / sps_
    alpha = math.sqrt(math.log(2) / 2) / bt
    h = np.exp(-((np.pi * t / alpha) ** 2))
    return h / h.sum()


def _normalize(s: np.ndarray) -> np.ndarray:
    p = np.mean(np.abs(s) ** 2)
    if not p > 0:
        raise SignalError("cannot normalize a zero-power waveform")
    return s / math.sqrt(p)


def _fsk_phase(freq: np.ndarray, index: float, sps_: int) -> np.ndarray:
    return np.pi * index * np.cumsum(freq) / sps_


def modulate_digital(mod_class: ModClass, rng: np.random.Generator, cfg: GenConfig) -> RawBurst:
    mod_class = ModClass(mod_class)
    if mod_class.is_analog:
        raise ClassMismatchError(f"{mod_class.label} is not a digital modulation")
    sp = cfg.samples_per_symbol
    n_sym = -(-BURST_LEN // sp) + 2 * _RRC_SPAN
    if mod_class in (ModClass.GFSK, ModClass.CPFSK):
        bits = rng.integers(0, 2, n_sym)
        freq = np.repeat(1.0 - 2.0 * bits, sp)
        if mod_class == ModClass.GFSK:
            freq = np.convolve(freq, gaussian_taps(sp, cfg.gfsk_bt), mode="same")
        s = np.exp(1j * _fsk_phase(freq, cfg.fsk_index, sp))
        start = _RRC_SPAN * sp
    else:
        alphabet = constellation(mod_class)
        up = np.zeros(n_sym * sp, dtype=complex)
        up[::sp] = map_symbols(mod_class, rng.integers(0, len(alphabet), n_sym))
        s = np.convolve(up, rrc_taps(sp, cfg.rrc_rolloff))
        start = _RRC_SPAN * sp
    return RawBurst(_normalize(s[start:start + BURST_LEN]), mod_class)


def lowpass_message(rng: np.random.Generator, n: int = BURST_LEN) -> np.ndarray:
    """Unit-RMS Gaussian noise band-limited to 0.1 of the sample rate."""
    taps = sps.firwin(_MESSAGE_TAPS, _MESSAGE_CUTOFF, fs=1.0)
    raw = rng.standard_normal(n + _MESSAGE_TAPS - 1)
    m = np.convolve(raw, taps, mode="valid")
    return m / np.sqrt(np.mean(m**2))


def wbfm(message: np.ndarray, deviation: float = _WBFM_DEVIATION) -> np.ndarray:
    return np.exp(2j * np.pi * deviation * np.cumsum(message))


def am_dsb(message: np.ndarray, depth: float = _AM_DEPTH) -> np.ndarray:
    return (1.0 + depth * np.asarray(message, dtype=float)).astype(complex)


def am_ssb(message: np.ndarray) -> np.ndarray:
    """Upper-sideband signal m + j*H{m}; the lower sideband is removed exactly."""
    return sps.hilbert(np.asarray(message, dtype=float))


def modulate_analog(mod_class: ModClass, rng: np.random.Generator, cfg: GenConfig) -> RawBurst:
    mod_class = ModClass(mod_class)
    if not mod_class.is_analog:
        raise ClassMismatchError(f"{mod_class.label} is not an analog modulation")
    m = lowpass_message(rng)
    if mod_class == ModClass.WBFM:
        s = wbfm(m)
    elif mod_class == ModClass.AM_DSB:
        s = am_dsb(m)
    else:
        s = am_ssb(m)
    return RawBurst(_normalize(s), mod_class)


def modulate(mod_class: ModClass, rng: np.random.Generator, cfg: GenConfig) -> RawBurst:
    if ModClass(mod_class).is_analog:
        return modulate_analog(mod_class, rng, cfg)
    return modulate_digital(mod_class, rng, cfg)


# ---------------------------------------------------------------- noise


def add_awgn(x: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Add circularly-symmetric Gaussian noise at ``snr_db`` relative to the power of ``x``."""
    x = np.asarray(x)
    if x.size == 0:
        raise SignalError("empty input")
    if snr_db == SNR_INF:
        return x.copy()
    p = float(np.mean(np.abs(x.astype(np.complex128)) ** 2))
    if not (p > 0 and math.isfinite(p)):
        raise SignalError("input power must be finite and positive; SNR is undefined")
    sigma = math.sqrt(p * 10.0 ** (-snr_db / 10.0) / 2.0)
    noise = sigma * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    return x + noise


# ---------------------------------------------------------------- datasets


def _combos(cfg: GenConfig):
    return [(c, snr, i) for c in cfg.classes for snr in cfg.snr_grid_db for i in range(cfg.frames_per_combo)]


def _burst_for(cfg: GenConfig, combo) -> np.ndarray:
    c, snr, i = combo
    return modulate(c, frame_rng(cfg.master_seed, c, snr, i, 0), cfg).samples


def generate_bursts(cfg: GenConfig, workers: int = 1, order: Sequence[int] | None = None) -> BurstSet:
    """Clean bursts for every (class, snr, index) combination.

    ``order`` permutes the generation sequence (the result does not depend on
    it); ``workers`` > 1 generates on a thread pool.
    """
    combos = _combos(cfg)
    out = np.empty((len(combos), BURST_LEN), dtype=np.complex128)
    todo = list(order) if order is not None else list(range(len(combos)))

    def work(k):
        out[k] = _burst_for(cfg, combos[k])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, todo))
    else:
        for k in todo:
            work(k)
    return BurstSet(
        samples=out,
        class_ids=np.array([c for c, _, _ in combos], dtype=np.int16),
        snr_db=np.array([s for _, s, _ in combos], dtype=np.float64),
        index=np.array([i for _, _, i in combos], dtype=np.int64),
        master_seed=cfg.master_seed,
    )


def clean_rms(burst: np.ndarray) -> float:
    head = np.asarray(burst[:FRAME_LEN])
    return float(np.sqrt(np.mean(np.abs(head) ** 2)))


def awgn_frames(bursts: BurstSet) -> FrameSet:
    """AWGN-only frames: first 128 burst samples plus noise at each burst's SNR."""
    n = len(bursts)
    iq = np.empty((n, FRAME_LEN), dtype=np.complex64)
    rms = np.empty(n, dtype=np.float32)
    for k in range(n):
        x = bursts.samples[k, :FRAME_LEN]
        rng = frame_rng(bursts.master_seed, bursts.class_ids[k], bursts.snr_db[k], bursts.index[k], 2)
        iq[k] = add_awgn(x, bursts.snr_db[k], rng)
        rms[k] = clean_rms(x)
    return FrameSet(iq, bursts.class_ids, bursts.snr_db, np.zeros(n), np.zeros(n), np.zeros(n), rms)


def generate_dataset(cfg: GenConfig, recipe=None, workers: int = 1) -> FrameSet:
    """Generate a labeled dataset; ``recipe`` is a ``channel.ChannelRecipe`` (AWGN when None)."""
    from . import channel

    recipe = recipe or channel.ChannelRecipe()
    bursts = generate_bursts(cfg, workers=workers)
    if recipe.kind == "awgn":
        return awgn_frames(bursts)
    return channel.derive_isi_dataset(bursts, recipe)
