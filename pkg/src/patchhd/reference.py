"""Naive scalar reference implementations used as test oracles.

Everything here favors obviousness over speed: plain Python loops, explicit
index arithmetic, one scalar operation at a time. The float32 paths round
after every multiply and every add, exactly like the vectorized pipeline
does per element, so agreement is expected bit for bit, and any mismatch
points at a real ordering or indexing bug rather than float noise.

These functions are imported only by the test suite and the self-test
command; production code paths never call them.
"""

from __future__ import annotations

import math

import numpy as np

from .hv import HvBanks


def naive_quantize(x: float, levels: int, scale: float, offset: float) -> int:
    idx = math.floor(x / scale + offset)
    return min(max(idx, 0), levels - 1)


def naive_permute(vec: np.ndarray, t: int) -> np.ndarray:
    dim = vec.shape[0]
    out = np.empty_like(vec)
    for d in range(dim):
        out[d] = vec[(d - t) % dim]
    return out


def naive_encode(
    level_image: np.ndarray,
    banks: HvBanks,
    patch: int,
    stride: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Scalar encoder; returns (signs int8, real accumulator float32).

    Per output dimension d: patches are visited in ascending ID order, the
    rotation is applied as an explicit source index (d - t) mod D, and each
    patch's pixels accumulate in row-major order with scalar float32 ops.
    """
    h_pad, w_pad = banks.grid
    k_h = (h_pad - patch) // stride + 1
    k_w = (w_pad - patch) // stride + 1
    dim = banks.dim
    base = banks.base
    lvl_bank = banks.levels
    acc = np.empty(dim, dtype=np.float32)
    signs = np.empty(dim, dtype=np.int8)
    for d in range(dim):
        total = np.float32(0.0)
        for t in range(k_h * k_w):
            gi, gj = divmod(t, k_w)
            src = (d - t) % dim
            patch_sum = np.float32(0.0)
            for di in range(patch):
                for dj in range(patch):
                    i = gi * stride + di
                    j = gj * stride + dj
                    prod = np.float32(
                        base[i, j, src] * lvl_bank[level_image[i, j], src]
                    )
                    patch_sum = np.float32(patch_sum + prod)
            total = np.float32(total + patch_sum)
        acc[d] = total
        signs[d] = 1 if total >= 0 else -1
    return signs, acc


def naive_bipolar_dot(a_signs: np.ndarray, b_signs: np.ndarray) -> int:
    total = 0
    for x, y in zip(a_signs.tolist(), b_signs.tolist()):
        total += x * y
    return total


def naive_cosine(proto_row: np.ndarray, h_signs: np.ndarray, dim: int) -> float:
    dot = 0.0
    sq = 0.0
    for p, h in zip(proto_row.tolist(), h_signs.tolist()):
        dot += p * h
        sq += p * p
    if sq == 0.0:
        return 0.0
    return dot / (math.sqrt(dim) * math.sqrt(sq))


def naive_total_cycles(
    dim: int,
    num_patches: int,
    patch: int,
    num_classes: int,
    p_d: int,
    p_patch: int,
    patch_proc_depth: int = 4,
    sim_depth: int = 3,
) -> int:
    """Count cycles by literally walking the issue schedule."""
    count = 0
    seg_start = 0
    while seg_start < dim:
        grp_start = 0
        while grp_start < num_patches:
            for _ in range(patch * patch):
                count += 1
            grp_start += p_patch
        seg_start += p_d
    count += patch_proc_depth
    count += _ceil_log2(p_patch)
    count += sim_depth
    count += _ceil_log2(num_classes)
    for _ in range(num_classes):
        count += 1
    return count


def _ceil_log2(x: int) -> int:
    n = 0
    while (1 << n) < x:
        n += 1
    return n
