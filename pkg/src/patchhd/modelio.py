"""Binary model persistence.

Layout (all little-endian, no padding, no timestamps, so identical training
runs produce byte-identical files):

    magic   6 bytes  b"HDPM1\\x00"
    header  <7IQI    dim, levels, h_pad, w_pad, patch, stride, num_classes
                     (u32 each), bank_seed (u64), flags (u32)
    packed  num_classes * ceil(dim/64) u64 words, the frozen prototypes
    real    optional (flags bit 0): num_classes * dim float32, the
            pre-freeze accumulators, for resuming/inspecting training

The random codebooks are not stored; they regenerate bit-identically from
(dim, grid, levels, bank_seed).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .learning import ClassPrototypes
from .scoring import num_words

MAGIC = b"HDPM1\x00"
_HEADER = struct.Struct("<7IQI")
FLAG_REAL_PROTOTYPES = 0x1


class ModelFormatError(ValueError):
    """Raised when a model file is malformed."""


@dataclass(frozen=True)
class ModelParams:
    """Everything needed to rebuild the encoder and score new images."""

    dim: int
    levels: int
    h_pad: int
    w_pad: int
    patch: int
    stride: int
    num_classes: int
    bank_seed: int


def save_model(path: str | Path, params: ModelParams, protos: ClassPrototypes) -> None:
    """Write a trained model; prototypes must be frozen."""
    packed = protos.require_packed()
    if packed.shape != (params.num_classes, num_words(params.dim)):
        raise ValueError(
            f"packed prototype shape {packed.shape} does not match params"
        )
    flags = 0
    if protos.real is not None:
        flags |= FLAG_REAL_PROTOTYPES
    header = _HEADER.pack(
        params.dim,
        params.levels,
        params.h_pad,
        params.w_pad,
        params.patch,
        params.stride,
        params.num_classes,
        params.bank_seed,
        flags,
    )
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(header)
        f.write(np.ascontiguousarray(packed, dtype="<u8").tobytes())
        if protos.real is not None:
            f.write(np.ascontiguousarray(protos.real, dtype="<f4").tobytes())


def load_model(path: str | Path) -> tuple[ModelParams, ClassPrototypes]:
    """Read a model file back into (params, prototypes)."""
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    off = len(MAGIC)
    if len(raw) < off + _HEADER.size:
        raise ModelFormatError(f"{path}: truncated header")
    dim, levels, h_pad, w_pad, patch, stride, num_classes, bank_seed, flags = (
        _HEADER.unpack_from(raw, off)
    )
    off += _HEADER.size
    params = ModelParams(
        dim=dim,
        levels=levels,
        h_pad=h_pad,
        w_pad=w_pad,
        patch=patch,
        stride=stride,
        num_classes=num_classes,
        bank_seed=bank_seed,
    )
    nw = num_words(dim)
    packed_bytes = num_classes * nw * 8
    if len(raw) < off + packed_bytes:
        raise ModelFormatError(f"{path}: truncated prototype payload")
    packed = (
        np.frombuffer(raw, dtype="<u8", count=num_classes * nw, offset=off)
        .reshape(num_classes, nw)
        .copy()
    )
    tail = dim % 64
    if tail and (packed[:, -1] >> np.uint64(tail)).any():
        raise ModelFormatError(f"{path}: nonzero pad bits in prototypes")
    off += packed_bytes
    protos = ClassPrototypes.from_packed(packed, dim)
    if flags & FLAG_REAL_PROTOTYPES:
        real_count = num_classes * dim
        if len(raw) < off + real_count * 4:
            raise ModelFormatError(f"{path}: truncated real prototype payload")
        protos.real = (
            np.frombuffer(raw, dtype="<f4", count=real_count, offset=off)
            .reshape(num_classes, dim)
            .copy()
        )
        off += real_count * 4
    if len(raw) != off:
        raise ModelFormatError(f"{path}: {len(raw) - off} trailing bytes")
    return params, protos
