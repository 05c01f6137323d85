"""``.mrdf`` dataset container.

Layout (all little-endian)::

    magic "MRDF" | version u16 | class count u16 | frame length u16 | record count u64
    class table: per class, u16 byte length + UTF-8 name
    records: class id u16 | SNR centi-dB i16 | channel tag u8 | path scale f32 |
             path delay u8 | clean RMS f32 | frame_len interleaved (I, Q) f32 pairs

An SNR of +inf is stored as the centi-dB sentinel 32767.
"""
from __future__ import annotations

import math
import os
import struct

import numpy as np

from ..errors import BadMagicError, ConfigError, CorruptionError, UnsupportedVersionError
from ..sigsynth import CLASS_NAMES, FRAME_LEN, ChannelTag, FrameSet, ModClass

MAGIC = b"MRDF"
VERSION = 1
SNR_INF_CENTI = 32767
_HEADER = struct.Struct("<4sHHHQ")


def record_dtype(frame_len: int = FRAME_LEN) -> np.dtype:
    return np.dtype([
        ("class_id", "<u2"),
        ("snr_centi", "<i2"),
        ("channel_tag", "u1"),
        ("path_scale", "<f4"),
        ("path_delay", "u1"),
        ("clean_rms", "<f4"),
        ("iq", "<f4", (2 * frame_len,)),
    ])


def _snr_to_centi(snr: np.ndarray) -> np.ndarray:
    out = np.empty(len(snr), dtype=np.int16)
    for k, s in enumerate(snr):
        if s == math.inf:
            out[k] = SNR_INF_CENTI
            continue
        c = round(s * 100)
        if not (math.isfinite(s) and -32768 <= c < SNR_INF_CENTI) or c / 100 != s:
            raise ConfigError(f"SNR {s} dB is not representable in centi-dB")
        out[k] = c
    return out


def _centi_to_snr(centi: np.ndarray) -> np.ndarray:
    snr = centi.astype(np.int64) / 100
    snr[centi == SNR_INF_CENTI] = math.inf
    return snr


def encode(frames: FrameSet) -> bytes:
    names = [n.encode("utf-8") for n in CLASS_NAMES]
    head = _HEADER.pack(MAGIC, VERSION, len(names), FRAME_LEN, len(frames))
    table = b"".join(struct.pack("<H", len(n)) + n for n in names)
    rec = np.zeros(len(frames), dtype=record_dtype())
    rec["class_id"] = frames.class_ids
    rec["snr_centi"] = _snr_to_centi(frames.snr_db)
    rec["channel_tag"] = frames.channel_tag
    rec["path_scale"] = frames.path_scale
    rec["path_delay"] = frames.path_delay
    rec["clean_rms"] = frames.clean_rms
    rec["iq"] = frames.iq.view(np.float32).reshape(len(frames), 2 * FRAME_LEN)
    return head + table + rec.tobytes()


def decode(buf: bytes) -> FrameSet:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError("not an MRDF file (bad magic)")
    if len(buf) < _HEADER.size:
        raise CorruptionError("file truncated inside the header")
    _, version, n_classes, frame_len, count = _HEADER.unpack_from(buf, 0)
    if version != VERSION:
        raise UnsupportedVersionError(f"MRDF version {version} is not supported (expected {VERSION})")
    if frame_len != FRAME_LEN:
        raise CorruptionError(f"frame length {frame_len} differs from {FRAME_LEN}")
    pos = _HEADER.size
    names = []
    for _ in range(n_classes):
        if pos + 2 > len(buf):
            raise CorruptionError("file truncated inside the class table")
        (n,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        if pos + n > len(buf):
            raise CorruptionError("file truncated inside the class table")
        try:
            names.append(buf[pos:pos + n].decode("utf-8"))
        except UnicodeDecodeError:
            raise CorruptionError("class table is not valid UTF-8") from None
        pos += n
    try:
        remap = np.array([int(ModClass.from_label(n)) for n in names], dtype=np.int16)
    except ConfigError as exc:
        raise CorruptionError(f"class table: {exc}") from None
    dt = record_dtype(frame_len)
    body = len(buf) - pos
    if body != count * dt.itemsize:
        raise CorruptionError(f"header promises {count} records ({count * dt.itemsize} bytes), found {body} bytes")
    rec = np.frombuffer(buf, dtype=dt, count=count, offset=pos)
    if count and rec["class_id"].max() >= n_classes:
        raise CorruptionError("record references a class outside the class table")
    if count and rec["channel_tag"].max() > max(ChannelTag):
        raise CorruptionError("unknown channel tag")
    if not np.all(np.isfinite(rec["iq"])):
        raise CorruptionError("non-finite sample values")
    if np.any(~(rec["clean_rms"] > 0)):
        raise CorruptionError("clean RMS must be positive")
    iq = np.ascontiguousarray(rec["iq"]).view(np.complex64).reshape(count, frame_len)
    class_ids = remap[rec["class_id"]] if count else np.zeros(0, dtype=np.int16)
    return FrameSet(iq.copy(), class_ids, _centi_to_snr(rec["snr_centi"]), rec["channel_tag"].copy(),
                    rec["path_scale"].copy(), rec["path_delay"].copy(), rec["clean_rms"].copy())


def write_dataset(frames: FrameSet, path: str | os.PathLike) -> None:
    data = encode(frames)
    with open(path, "wb") as fh:
        fh.write(data)


def read_dataset(path: str | os.PathLike) -> FrameSet:
    with open(path, "rb") as fh:
        return decode(fh.read())
