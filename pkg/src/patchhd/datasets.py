"""IDX image/label file ingestion and image preprocessing.

The IDX format stores a big-endian magic, big-endian u32 dimension sizes,
then raw payload bytes. Image files use magic 0x00000803 with dims
(N, H, W); label files use 0x00000801 with dims (N,). Gzip-compressed files
are accepted transparently (detected by the 0x1f 0x8b header).

Preprocessing: images are zero-padded to a target grid (centered, extra
pixel on the bottom/right for odd differences) and normalized to [0, 1]
float32 by dividing by 255.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
_GZIP_HEADER = b"\x1f\x8b"


class IdxFormatError(ValueError):
    """Raised when an IDX file is malformed or has the wrong magic."""


def _read_bytes(path: str | Path) -> bytes:
    with open(path, "rb") as f:
        head = f.read(2)
        rest = f.read()
    raw = head + rest
    if head == _GZIP_HEADER:
        return gzip.decompress(raw)
    return raw


def _parse_header(raw: bytes, expected_magic: int, ndim: int, path) -> tuple[int, ...]:
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise IdxFormatError(f"{path}: file too short for an IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != expected_magic:
        raise IdxFormatError(
            f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    return struct.unpack(f">{ndim}I", raw[4:header_len])


def read_idx_images(path: str | Path) -> np.ndarray:
    """Read an IDX image file into a (N, H, W) uint8 array."""
    raw = _read_bytes(path)
    n, h, w = _parse_header(raw, IMAGES_MAGIC, 3, path)
    payload = raw[16:]
    if len(payload) != n * h * w:
        raise IdxFormatError(
            f"{path}: payload holds {len(payload)} bytes, header promises {n * h * w}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(n, h, w)


def read_idx_labels(path: str | Path) -> np.ndarray:
    """Read an IDX label file into a (N,) uint8 array."""
    raw = _read_bytes(path)
    (n,) = _parse_header(raw, LABELS_MAGIC, 1, path)
    payload = raw[8:]
    if len(payload) != n:
        raise IdxFormatError(
            f"{path}: payload holds {len(payload)} bytes, header promises {n}"
        )
    return np.frombuffer(payload, dtype=np.uint8).copy()


def write_idx_images(path: str | Path, images: np.ndarray) -> None:
    """Write a (N, H, W) uint8 array as an IDX image file."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGES_MAGIC, n, h, w))
        f.write(images.tobytes())


def write_idx_labels(path: str | Path, labels: np.ndarray) -> None:
    """Write a (N,) uint8 array as an IDX label file."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", LABELS_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


def pad_images(images: np.ndarray, target: tuple[int, int] = (32, 32)) -> np.ndarray:
    """Zero-pad (N, H, W) images to the target grid, centered.

    An odd size difference puts the extra row/column on the bottom/right.
    28x28 inputs with the default target get a 2-pixel border all around.
    """
    images = np.asarray(images)
    _, h, w = images.shape
    th, tw = target
    if th < h or tw < w:
        raise ValueError(f"target {target} smaller than image size {(h, w)}")
    top = (th - h) // 2
    left = (tw - w) // 2
    return np.pad(
        images,
        ((0, 0), (top, th - h - top), (left, tw - w - left)),
        mode="constant",
    )


def normalize_images(images: np.ndarray) -> np.ndarray:
    """Scale uint8 pixel values into [0, 1] float32."""
    return np.asarray(images, dtype=np.float32) / np.float32(255.0)


def load_image_set(
    images_path: str | Path,
    labels_path: str | Path,
    pad_to: tuple[int, int] = (32, 32),
    limit: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Read, pad, and normalize an IDX image/label pair.

    Returns (images, labels) with images float32 in [0, 1] of shape
    (N, *pad_to). `limit` truncates to the first N samples.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"image count {images.shape[0]} does not match label count "
            f"{labels.shape[0]}"
        )
    if limit is not None:
        images = images[:limit]
        labels = labels[:limit]
    return normalize_images(pad_images(images, pad_to)), labels
