"""Hypervector algebra.

Core operations on high-dimensional vectors:
    - bind(a, b):       element-wise multiplication (associates two HVs)
    - accumulate(a, x): element-wise addition (the summation half of bundling)
    - permute(h, t):    cyclic rotation by t positions (encodes position/order)
    - binarize(h):      bipolarize a real HV into a packed {-1,+1} vector
    - bipolar_dot(a,b): integer inner product of two packed bipolar HVs
    - generate_banks:   random position/level codebooks, unit L2 norm

Conventions used throughout the package:
    - real hypervectors are float32 numpy arrays
    - bipolar HVs are bit-packed into 64-bit words, little-endian bit order:
      dimension d lives in bit (d % 64) of word (d // 64); stored bit 1 means
      +1 and bit 0 means -1; trailing pad bits of the last word are zero
    - sign(0) = +1 wherever a real value is bipolarized
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WORD_BITS = 64


def _num_words(dim: int) -> int:
    return (dim + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack an array of 0/1 values along its last axis into uint64 words.

    Bit order is little-endian: element d of the input becomes bit (d % 64)
    of output word (d // 64). Trailing pad bits are zero.
    """
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    dim = bits.shape[-1]
    pad = (-dim) % WORD_BITS
    if pad:
        pad_block = np.zeros(bits.shape[:-1] + (pad,), dtype=np.uint8)
        bits = np.concatenate([bits, pad_block], axis=-1)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return packed.view("<u8")


def unpack_bits(words: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns a 0/1 uint8 array of length `dim`."""
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :dim]


def popcount(words: np.ndarray) -> int:
    """Total number of set bits across a word array."""
    return int(np.bitwise_count(words).sum())


@dataclass(frozen=True, eq=False)
class BipolarHV:
    """A bit-packed {-1,+1}^D hypervector.

    `words` holds ceil(D / 64) uint64 words; bit d%64 of word d//64 encodes
    dimension d (1 = +1, 0 = -1). Pad bits beyond D are zero.
    """

    words: np.ndarray
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        words = np.ascontiguousarray(self.words, dtype="<u8")
        if words.shape != (_num_words(self.dim),):
            raise ValueError(
                f"expected {_num_words(self.dim)} words for dim={self.dim}, "
                f"got shape {words.shape}"
            )
        tail = self.dim % WORD_BITS
        if tail and (int(words[-1]) >> tail) != 0:
            raise ValueError("pad bits beyond dim must be zero")
        object.__setattr__(self, "words", words)

    @classmethod
    def from_signs(cls, values: np.ndarray) -> "BipolarHV":
        """Build from a real/int vector; entries >= 0 map to +1."""
        values = np.asarray(values)
        return cls(pack_bits(values >= 0), values.shape[-1])

    def to_signs(self) -> np.ndarray:
        """Unpack to an int8 array of -1/+1 values."""
        bits = unpack_bits(self.words, self.dim)
        return (bits.astype(np.int8) * 2) - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, BipolarHV):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.words, other.words)


def negate(h: BipolarHV) -> BipolarHV:
    """Flip every entry of a bipolar HV (pad bits stay zero)."""
    flipped = ~h.words
    tail = h.dim % WORD_BITS
    if tail:
        flipped[-1] &= np.uint64((1 << tail) - 1)
    return BipolarHV(flipped, h.dim)


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def bind(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Element-wise product of two hypervectors.

    The result is quasi-orthogonal to both inputs; for bipolar inputs it is
    the XOR analogue. Commutative and self-inverse on {-1,+1} values.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_dim(a, b)
    return a * b


def accumulate(acc: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Add `x` into `acc` in place (the summation half of bundling)."""
    acc = np.asarray(acc)
    x = np.asarray(x)
    _check_same_dim(acc, x)
    acc += x
    return acc


def permute(h: np.ndarray, t: int) -> np.ndarray:
    """Cyclic rotation by `t` positions: result[d] = h[(d - t) mod D].

    `t` is reduced modulo D, so patch IDs larger than D are fine.
    """
    h = np.asarray(h)
    return np.roll(h, int(t) % h.shape[-1])


def binarize(h: np.ndarray) -> BipolarHV:
    """Bipolarize a real hypervector: +1 where h[d] >= 0, else -1."""
    h = np.asarray(h)
    if np.isnan(h).any():
        raise ValueError("cannot binarize a vector containing NaN")
    return BipolarHV(pack_bits(h >= 0), h.shape[-1])


def bipolar_dot(a: BipolarHV, b: BipolarHV) -> int:
    """Integer inner product of two bipolar HVs, in [-D, +D].

    Computed over the packed words as D - 2 * popcount(a XOR b), which equals
    the naive sum over unpacked +-1 values.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return a.dim - 2 * popcount(a.words ^ b.words)


@dataclass(frozen=True)
class HvBanks:
    """Random hypervector codebooks for pixel positions and intensity levels.

    `base[i, j]` is the position HV for padded pixel (i, j); `levels[l]` is
    the HV for quantized intensity level l. All vectors are drawn i.i.d. from
    a standard Gaussian and divided by their L2 norm. Regeneration from the
    same (dim, grid, levels, seed) is bit-identical.
    """

    base: np.ndarray = field(repr=False)    # (H_pad, W_pad, D) float32
    levels: np.ndarray = field(repr=False)  # (L, D) float32
    dim: int
    seed: int

    @property
    def grid(self) -> tuple[int, int]:
        return self.base.shape[0], self.base.shape[1]

    @property
    def num_levels(self) -> int:
        return self.levels.shape[0]

    @property
    def base_flat(self) -> np.ndarray:
        """Row-major (H_pad * W_pad, D) view of the position bank."""
        return self.base.reshape(-1, self.dim)


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    # norms accumulated in float64 so unit norm holds well within 1e-5
    norms = np.sqrt(np.einsum("nd,nd->n", m, m, dtype=np.float64))
    m /= norms.astype(np.float32)[:, None]
    return m


def generate_banks(dim: int, grid: tuple[int, int], levels: int, seed: int) -> HvBanks:
    """Generate position and level banks deterministically from a seed.

    Uses the counter-based Philox generator keyed by `seed`; draws the base
    bank first (row-major over the pixel grid), then the level bank in
    ascending level order, as float32 standard normals (numpy's ziggurat
    sampler), then L2-normalizes each vector.

    Args:
        dim: hypervector dimensionality D (>= 1).
        grid: (H_pad, W_pad) pixel grid of the padded image.
        levels: number of quantized intensity levels L (>= 2).
        seed: 64-bit seed; equal seeds give bit-identical banks.
    """
    h, w = grid
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    if h < 1 or w < 1:
        raise ValueError(f"grid dims must be >= 1, got {grid}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    base = rng.standard_normal((h * w, dim), dtype=np.float32)
    lvl = rng.standard_normal((levels, dim), dtype=np.float32)
    base = _normalize_rows(base).reshape(h, w, dim)
    lvl = _normalize_rows(lvl)
    base.setflags(write=False)
    lvl.setflags(write=False)
    return HvBanks(base=base, levels=lvl, dim=dim, seed=int(seed))
