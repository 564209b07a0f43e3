"""Patch-based image encoding into bipolar hypervectors.

Pipeline per image:
    1. quantize each normalized pixel into one of L intensity levels
    2. for each M x M patch (stride r, row-major patch IDs) bind every
       pixel's position HV with its level HV and sum the M^2 products
    3. rotate each patch sum by its patch ID and sum over all patches
    4. bipolarize the global sum (sign, with sign(0) = +1)

Float32 summation order is normative so that independently written
implementations can match bit-for-bit: within a patch, pixel products are
accumulated one at a time in row-major pixel order; across patches, rotated
patch sums are accumulated in ascending patch-ID order.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import hv as hv_ops
from .hv import BipolarHV, HvBanks, binarize

DEFAULT_SCALE = 1.0 / 255.0
DEFAULT_OFFSET = 0.0
DEFAULT_LEVELS = 256


def quantize_image(
    image: np.ndarray,
    levels: int = DEFAULT_LEVELS,
    scale: float | None = None,
    offset: float = DEFAULT_OFFSET,
) -> np.ndarray:
    """Map normalized pixel values to integer level indices.

    level = clip(floor(x / scale + offset), 0, levels - 1)

    `scale` defaults to 1 / (levels - 1) so the levels tile [0, 1]; at the
    default 256 levels that is 1/255 and the level IS the original byte.
    The division runs in float64: with scale 1/255, float32 arithmetic
    misquantizes dozens of byte values (e.g. 7/255 lands below 7) while
    float64 recovers every byte of a /255-normalized image exactly.
    """
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    if scale is None:
        scale = 1.0 / (levels - 1)
    x = np.asarray(image, dtype=np.float64)
    idx = np.floor(x / float(scale) + float(offset))
    return np.clip(idx, 0, levels - 1).astype(np.int32)


def patch_grid(h_pad: int, w_pad: int, patch: int, stride: int) -> tuple[int, int]:
    """Number of patch rows/cols for an (h_pad, w_pad) image.

    K_H = floor((h_pad - patch) / stride) + 1, same for width. Pixels beyond
    the last full patch are dropped.
    """
    if patch < 1:
        raise ValueError(f"patch must be >= 1, got {patch}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if patch > h_pad or patch > w_pad:
        raise ValueError(
            f"patch {patch} exceeds image size {h_pad}x{w_pad}"
        )
    return (h_pad - patch) // stride + 1, (w_pad - patch) // stride + 1


def encode_pixel(i: int, j: int, level: int, banks: HvBanks) -> np.ndarray:
    """Bind the position HV at (i, j) with the intensity HV for `level`.

    Returns the float32 product vector; no accumulation or rotation here.
    """
    return hv_ops.bind(banks.base[i, j], banks.levels[level])


def encode_patch(
    level_image: np.ndarray,
    banks: HvBanks,
    gi: int,
    gj: int,
    patch: int,
    stride: int,
) -> np.ndarray:
    """Sum the bound pixel HVs of one patch, row-major, without rotation.

    (gi, gj) indexes the patch grid; the caller applies the patch-ID
    rotation. Accumulation order is fixed so results are bit-reproducible.
    """
    patch_acc = np.zeros(banks.dim, dtype=np.float32)
    for di in range(patch):
        i = gi * stride + di
        for dj in range(patch):
            j = gj * stride + dj
            patch_acc += encode_pixel(i, j, level_image[i, j], banks)
    return patch_acc


def encode_image_real(
    level_image: np.ndarray,
    banks: HvBanks,
    patch: int,
    stride: int,
) -> np.ndarray:
    """Encode a quantized image into the real-valued (pre-sign) image HV.

    `level_image` holds integer level indices with the same (H_pad, W_pad)
    shape as the position bank grid. Returns the float32 global accumulator.
    """
    level_image = np.asarray(level_image)
    h_pad, w_pad = banks.grid
    if level_image.shape != (h_pad, w_pad):
        raise ValueError(
            f"image shape {level_image.shape} does not match bank grid "
            f"{(h_pad, w_pad)}"
        )
    if level_image.min() < 0 or level_image.max() >= banks.num_levels:
        raise ValueError("level index out of range for the level bank")
    k_h, k_w = patch_grid(h_pad, w_pad, patch, stride)
    acc = np.zeros(banks.dim, dtype=np.float32)
    for gi in range(k_h):
        for gj in range(k_w):
            t = gi * k_w + gj
            acc += hv_ops.permute(
                encode_patch(level_image, banks, gi, gj, patch, stride), t
            )
    return acc


def encode_image(
    level_image: np.ndarray,
    banks: HvBanks,
    patch: int,
    stride: int,
) -> BipolarHV:
    """Encode a quantized image into a packed bipolar hypervector."""
    return binarize(encode_image_real(level_image, banks, patch, stride))


# Worker state for fork-based parallel encoding. Set in the parent before
# the pool is created so children inherit it copy-on-write; results are
# merged by index, so the output is identical for any worker count.
_WORKER: dict = {}


def _encode_chunk(args: tuple[int, int]) -> tuple[int, np.ndarray]:
    start, stop = args
    banks = _WORKER["banks"]
    patch = _WORKER["patch"]
    stride = _WORKER["stride"]
    images = _WORKER["images"]
    n_words = (banks.dim + hv_ops.WORD_BITS - 1) // hv_ops.WORD_BITS
    out = np.empty((stop - start, n_words), dtype="<u8")
    for k in range(start, stop):
        out[k - start] = encode_image(images[k], banks, patch, stride).words
    return start, out


def encode_images(
    level_images: np.ndarray,
    banks: HvBanks,
    patch: int,
    stride: int,
    workers: int = 1,
) -> np.ndarray:
    """Encode a batch of quantized images into packed HV words.

    Returns an (N, ceil(D/64)) uint64 array, row k holding the packed HV of
    image k. With workers > 1 the batch is split across forked processes;
    per-image encoding is pure, so results do not depend on worker count.
    """
    level_images = np.asarray(level_images)
    n = level_images.shape[0]
    n_words = (banks.dim + hv_ops.WORD_BITS - 1) // hv_ops.WORD_BITS
    out = np.empty((n, n_words), dtype="<u8")
    if workers <= 1 or n < 2 * workers:
        for k in range(n):
            out[k] = encode_image(level_images[k], banks, patch, stride).words
        return out

    _WORKER.update(banks=banks, patch=patch, stride=stride, images=level_images)
    try:
        chunk = -(-n // workers)
        spans = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            for start, words in pool.map(_encode_chunk, spans):
                out[start : start + words.shape[0]] = words
    finally:
        _WORKER.clear()
    return out
