"""``.ckpt`` model checkpoints.

Layout (little-endian): magic "MRCK" | version u16 | u32 length + UTF-8 JSON
metadata (net spec, hyperparameters, free-form extras) | u16 tensor count |
per tensor: u16 name length + name, u8 ndim, u32 per dim, f32 data.
"""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import BadMagicError, CorruptionError, UnsupportedVersionError
from ..nn.network import NetSpec, check_params
from ..nn.training import Hyperparams

MAGIC = b"MRCK"
VERSION = 1
_MAX_NDIM = 4


@dataclass
class Checkpoint:
    spec: NetSpec
    params: dict[str, np.ndarray]
    hyper: Hyperparams
    extra: dict = field(default_factory=dict)


def encode(ckpt: Checkpoint) -> bytes:
    check_params(ckpt.spec, ckpt.params)
    meta = json.dumps({"spec": ckpt.spec.to_dict(), "hyper": ckpt.hyper.to_dict(), "extra": ckpt.extra},
                      sort_keys=True).encode("utf-8")
    out = [MAGIC, struct.pack("<HI", VERSION, len(meta)), meta, struct.pack("<H", len(ckpt.params))]
    for name, arr in ckpt.params.items():
        raw = name.encode("utf-8")
        out.append(struct.pack("<H", len(raw)) + raw)
        out.append(struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape))
        out.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf, self.pos = buf, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptionError("checkpoint truncated")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))


def decode(buf: bytes) -> Checkpoint:
    if buf[:4] != MAGIC:
        raise BadMagicError("not a checkpoint file (bad magic)")
    r = _Reader(buf)
    r.take(4)
    version, meta_len = r.unpack("HI")
    if version != VERSION:
        raise UnsupportedVersionError(f"checkpoint version {version} is not supported")
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
        spec = NetSpec(**meta["spec"])
        hyper = Hyperparams(**meta["hyper"])
        extra = meta.get("extra", {})
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptionError(f"bad checkpoint metadata: {exc}") from None
    (count,) = r.unpack("H")
    params = {}
    for _ in range(count):
        (n,) = r.unpack("H")
        name = r.take(n).decode("utf-8", errors="replace")
        (ndim,) = r.unpack("B")
        if ndim > _MAX_NDIM:
            raise CorruptionError(f"tensor {name!r} claims {ndim} dimensions")
        shape = r.unpack(f"{ndim}I")
        size = int(np.prod(shape, dtype=np.int64))
        params[name] = np.frombuffer(r.take(4 * size), dtype="<f4").reshape(shape).astype(np.float32)
    if r.pos != len(buf):
        raise CorruptionError("trailing bytes after the last tensor")
    try:
        check_params(spec, params)
    except ValueError as exc:
        raise CorruptionError(str(exc)) from None
    return Checkpoint(spec, params, hyper, extra)


def save_checkpoint(ckpt: Checkpoint, path: str | os.PathLike) -> None:
    data = encode(ckpt)
    with open(path, "wb") as fh:
        fh.write(data)


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    with open(path, "rb") as fh:
        return decode(fh.read())
