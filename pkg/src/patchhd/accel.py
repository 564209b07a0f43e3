"""Cycle-parametric simulator of a streaming inference accelerator.

Models a pipeline with four stages: patch processors (P_patch of them, each
binding/summing one patch's pixels P_D dimensions at a time), an adder tree
over the patch lanes, a similarity engine producing packed-domain dot
products, and a serial argmax scan over the class scores.

The datapath here is written against the hardware dataflow, not the software
encoder: it is output-stationary over dimension segments of width P_D, and
patch rotation is realized as a gather (source index (d - t) mod D) rather
than by rotating whole vectors. Per output element the float32 operations
happen in the same order as the software pipeline (row-major pixels within a
patch, ascending patch IDs across patches), so both routes agree bit for bit
and any divergence between them is a real defect in one of the two.

Cycle accounting is done twice: counters incremented as loop events issue,
and a closed-form model. The two must agree exactly:

    segments     S = ceil(D / P_D)
    groups       G = ceil(T / P_patch)
    patch_encode = G * M^2 * S
    total        = patch_encode + patch_proc_depth + ceil(log2(P_patch))
                   + sim_depth + ceil(log2(C)) + C

Host-side transfers are out of scope; latency covers on-accelerator work for
one image, and throughput assumes back-to-back images at that latency.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .encoding import patch_grid
from .hv import HvBanks, pack_bits

DEFAULT_P_D = 256
DEFAULT_P_PATCH = 16
DEFAULT_CLOCK_MHZ = 250.0
DEFAULT_PATCH_PROC_DEPTH = 4
DEFAULT_SIM_DEPTH = 3


def ceil_log2(x: int) -> int:
    if x < 1:
        raise ValueError(f"ceil_log2 needs x >= 1, got {x}")
    return (x - 1).bit_length()


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class AccelConfig:
    """Hardware shape parameters.

    p_d: dimension lanes per cycle (segment width).
    p_patch: patch processors working in parallel.
    clock_mhz: clock used to convert cycles into wall time.
    patch_proc_depth / sim_depth: pipeline fill depths of the fixed stages.
    """

    p_d: int = DEFAULT_P_D
    p_patch: int = DEFAULT_P_PATCH
    clock_mhz: float = DEFAULT_CLOCK_MHZ
    patch_proc_depth: int = DEFAULT_PATCH_PROC_DEPTH
    sim_depth: int = DEFAULT_SIM_DEPTH

    def __post_init__(self):
        if self.p_d < 1:
            raise ValueError(f"p_d must be >= 1, got {self.p_d}")
        if self.p_patch < 1:
            raise ValueError(f"p_patch must be >= 1, got {self.p_patch}")
        if self.clock_mhz <= 0:
            raise ValueError(f"clock_mhz must be > 0, got {self.clock_mhz}")


@dataclass
class CycleBreakdown:
    """Per-stage cycle counts; `total` is their exact sum."""

    segments: int
    groups: int
    patch_encode: int
    patch_proc_fill: int
    adder_tree: int
    similarity: int
    argmax: int

    @property
    def total(self) -> int:
        return (
            self.patch_encode
            + self.patch_proc_fill
            + self.adder_tree
            + self.similarity
            + self.argmax
        )


def closed_form_cycles(
    dim: int,
    num_patches: int,
    patch: int,
    num_classes: int,
    config: AccelConfig,
) -> CycleBreakdown:
    """Analytic cycle model for one image on the given hardware shape."""
    segments = ceil_div(dim, config.p_d)
    groups = ceil_div(num_patches, config.p_patch)
    return CycleBreakdown(
        segments=segments,
        groups=groups,
        patch_encode=groups * patch * patch * segments,
        patch_proc_fill=config.patch_proc_depth,
        adder_tree=ceil_log2(config.p_patch),
        similarity=config.sim_depth,
        argmax=ceil_log2(num_classes) + num_classes,
    )


def latency_us(cycles: int, clock_mhz: float) -> float:
    return cycles / clock_mhz


def throughput_img_per_s(cycles: int, clock_mhz: float) -> float:
    return clock_mhz * 1e6 / cycles


@dataclass
class SimReport:
    """Result of simulating one image end to end.

    `host_transfers` is a fixed reminder that modeled latency covers the
    compute pipeline only; moving pixels and results on/off the device is
    deliberately outside the cycle model.
    """

    predicted_label: int
    raw_scores: np.ndarray = field(repr=False)
    scores: np.ndarray = field(repr=False)
    cycles: CycleBreakdown
    latency_us: float
    throughput_img_per_s: float
    hv_words: np.ndarray = field(repr=False)
    host_transfers: str = "not modeled"


def _encode_streaming(
    level_image: np.ndarray,
    banks: HvBanks,
    patch: int,
    stride: int,
    config: AccelConfig,
    counters: CycleBreakdown,
) -> np.ndarray:
    """Run the patch-processor / adder-tree dataflow; returns packed HV words.

    Output-stationary: each dimension segment is finished before the next
    starts. Within a segment, patch groups stream through in ascending order
    and each group's M^2 pixel bind-accumulate steps issue one cycle each.
    """
    dim = banks.dim
    h_pad, w_pad = banks.grid
    k_h, k_w = patch_grid(h_pad, w_pad, patch, stride)
    num_patches = k_h * k_w
    base_flat = banks.base_flat
    levels = banks.levels
    level_image = np.asarray(level_image)

    t_all = np.arange(num_patches, dtype=np.int64)
    gi_all = t_all // k_w
    gj_all = t_all % k_w

    bits = np.empty(dim, dtype=np.uint8)
    for seg_start in range(0, dim, config.p_d):
        wid = min(config.p_d, dim - seg_start)
        out_pos = seg_start + np.arange(wid, dtype=np.int64)
        acc_seg = np.zeros(wid, dtype=np.float32)
        for grp_start in range(0, num_patches, config.p_patch):
            ts = t_all[grp_start : grp_start + config.p_patch]
            gi = gi_all[grp_start : grp_start + config.p_patch]
            gj = gj_all[grp_start : grp_start + config.p_patch]
            # rotation by t realized as a gather from source dimensions
            src = (out_pos[None, :] - ts[:, None]) % dim
            group_vals = np.zeros((ts.shape[0], wid), dtype=np.float32)
            for di in range(patch):
                rows = gi * stride + di
                for dj in range(patch):
                    cols = gj * stride + dj
                    lvl_idx = level_image[rows, cols]
                    base_rows = base_flat[rows * w_pad + cols]
                    lvl_rows = levels[lvl_idx]
                    group_vals += np.take_along_axis(
                        base_rows, src, axis=1
                    ) * np.take_along_axis(lvl_rows, src, axis=1)
                    counters.patch_encode += 1
            for k in range(ts.shape[0]):
                acc_seg += group_vals[k]
        bits[seg_start : seg_start + wid] = acc_seg >= 0
    return pack_bits(bits)


def _score_and_argmax(
    hv_words: np.ndarray,
    proto_words: np.ndarray,
    dim: int,
    counters: CycleBreakdown,
) -> tuple[int, np.ndarray]:
    """Similarity engine + serial argmax scan over classes."""
    num_classes = proto_words.shape[0]
    raw = np.empty(num_classes, dtype=np.int64)
    best = -1
    best_score = None
    for c in range(num_classes):
        mism = int(np.bitwise_count(proto_words[c] ^ hv_words).sum())
        raw[c] = dim - 2 * mism
        # strict > keeps the lowest index on ties
        if best_score is None or raw[c] > best_score:
            best_score = raw[c]
            best = c
        counters.argmax += 1
    return best, raw


def simulate_image(
    level_image: np.ndarray,
    banks: HvBanks,
    patch: int,
    stride: int,
    proto_words: np.ndarray,
    config: AccelConfig | None = None,
) -> SimReport:
    """Simulate one quantized image through encode, score, and argmax.

    `proto_words` holds the packed class prototypes, shape (C, ceil(D/64)).
    The returned report carries event-counted cycles; compare against
    :func:`closed_form_cycles` to validate the cycle model.
    """
    config = config or AccelConfig()
    proto_words = np.asarray(proto_words, dtype="<u8")
    dim = banks.dim
    h_pad, w_pad = banks.grid
    k_h, k_w = patch_grid(h_pad, w_pad, patch, stride)
    num_classes = proto_words.shape[0]

    counters = CycleBreakdown(
        segments=ceil_div(dim, config.p_d),
        groups=ceil_div(k_h * k_w, config.p_patch),
        patch_encode=0,
        patch_proc_fill=0,
        adder_tree=0,
        similarity=0,
        argmax=0,
    )
    # fixed pipeline fills charged when each stage first activates
    counters.patch_proc_fill = config.patch_proc_depth
    counters.adder_tree = ceil_log2(config.p_patch)
    hv_words = _encode_streaming(level_image, banks, patch, stride, config, counters)
    counters.similarity = config.sim_depth
    counters.argmax = ceil_log2(num_classes)
    label, raw = _score_and_argmax(hv_words, proto_words, dim, counters)

    total = counters.total
    return SimReport(
        predicted_label=label,
        raw_scores=raw,
        scores=raw.astype(np.float64) / dim,
        cycles=counters,
        latency_us=latency_us(total, config.clock_mhz),
        throughput_img_per_s=throughput_img_per_s(total, config.clock_mhz),
        hv_words=hv_words,
    )


def sweep(
    configs: list[AccelConfig],
    level_image: np.ndarray,
    banks: HvBanks,
    patch: int,
    stride: int,
    proto_words: np.ndarray,
) -> list[SimReport]:
    """Simulate one sample image under each hardware shape.

    The functional pipeline is shape-independent, so labels, scores, and HV
    words must agree across all reports; only cycle counts and timing vary.
    """
    if not configs:
        raise ValueError("configs must be non-empty")
    return [
        simulate_image(level_image, banks, patch, stride, proto_words, cfg)
        for cfg in configs
    ]


_SIM_WORKER: dict = {}


def _simulate_chunk(args: tuple[int, int]) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    start, stop = args
    banks = _SIM_WORKER["banks"]
    n_words = (banks.dim + 63) // 64
    num_classes = _SIM_WORKER["protos"].shape[0]
    labels = np.empty(stop - start, dtype=np.int64)
    raw = np.empty((stop - start, num_classes), dtype=np.int64)
    words = np.empty((stop - start, n_words), dtype="<u8")
    for k in range(start, stop):
        rep = simulate_image(
            _SIM_WORKER["images"][k],
            banks,
            _SIM_WORKER["patch"],
            _SIM_WORKER["stride"],
            _SIM_WORKER["protos"],
            _SIM_WORKER["config"],
        )
        labels[k - start] = rep.predicted_label
        raw[k - start] = rep.raw_scores
        words[k - start] = rep.hv_words
    return start, labels, raw, words


def simulate_images(
    level_images: np.ndarray,
    banks: HvBanks,
    patch: int,
    stride: int,
    proto_words: np.ndarray,
    config: AccelConfig | None = None,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate a batch; returns (labels, raw_scores, hv_words) arrays.

    Per-image simulation is pure, so worker count cannot change results.
    """
    config = config or AccelConfig()
    proto_words = np.asarray(proto_words, dtype="<u8")
    level_images = np.asarray(level_images)
    n = level_images.shape[0]
    n_words = (banks.dim + 63) // 64
    labels = np.empty(n, dtype=np.int64)
    raw = np.empty((n, proto_words.shape[0]), dtype=np.int64)
    words = np.empty((n, n_words), dtype="<u8")

    if workers <= 1 or n < 2 * workers:
        for k in range(n):
            rep = simulate_image(
                level_images[k], banks, patch, stride, proto_words, config
            )
            labels[k] = rep.predicted_label
            raw[k] = rep.raw_scores
            words[k] = rep.hv_words
        return labels, raw, words

    _SIM_WORKER.update(
        banks=banks,
        patch=patch,
        stride=stride,
        protos=proto_words,
        config=config,
        images=level_images,
    )
    try:
        chunk = -(-n // workers)
        spans = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            for start, lab, rw, wd in pool.map(_simulate_chunk, spans):
                labels[start : start + lab.shape[0]] = lab
                raw[start : start + rw.shape[0]] = rw
                words[start : start + wd.shape[0]] = wd
    finally:
        _SIM_WORKER.clear()
    return labels, raw, words
