"""Self-contained diagnostic suites over synthetic data.

Each suite returns a SuiteResult and makes no network or dataset-file
access, so the whole battery runs anywhere in under a minute. The pytest
suite asserts on these same functions; the `selftest` CLI subcommand runs
them all and reports one line per suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import accel, encoding, learning, reference, scoring
from .hv import BipolarHV, bipolar_dot, generate_banks, pack_bits, permute

HV_DIMS = (7, 8, 64, 100, 10000)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _timed(name: str, fn) -> SuiteResult:
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, not an error
        return SuiteResult(name, False, f"exception: {exc!r}", time.perf_counter() - start)
    return SuiteResult(name, ok, detail, time.perf_counter() - start)


def make_synthetic_images(
    num_classes: int,
    per_class: int,
    grid: tuple[int, int] = (8, 8),
    block: int = 2,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Separable toy images: low noise plus a class-positioned bright block.

    Class c's block sits at a corner-cycled offset, so classes are linearly
    separable long before encoding. Pixel values stay in [0, 1].
    """
    h, w = grid
    if block > h or block > w:
        raise ValueError("block larger than grid")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    n = num_classes * per_class
    images = rng.uniform(0.0, 0.4, size=(n, h, w)).astype(np.float32)
    labels = np.repeat(np.arange(num_classes, dtype=np.uint8), per_class)
    corners = [(0, 0), (h - block, w - block), (0, w - block), (h - block, 0)]
    for k in range(n):
        c = labels[k]
        oi, oj = corners[c % len(corners)]
        oi = (oi + (c // len(corners))) % (h - block + 1)
        patch_vals = rng.uniform(0.8, 1.0, size=(block, block)).astype(np.float32)
        images[k, oi : oi + block, oj : oj + block] = patch_vals
    order = rng.permutation(n)
    return images[order], labels[order]


def hv_dims_suite(pairs: int = 1000, seed: int = 1) -> tuple[bool, str]:
    """Random-pair properties of the packed bipolar algebra.

    For each pair: pack/unpack round-trip, dot computed on packed words
    equals the scalar sum over signs, dot bounds and parity, and rotation
    matches explicit index arithmetic.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    for k in range(pairs):
        dim = int(HV_DIMS[k % len(HV_DIMS)])
        a_signs = rng.integers(0, 2, size=dim).astype(np.int8) * 2 - 1
        b_signs = rng.integers(0, 2, size=dim).astype(np.int8) * 2 - 1
        a = BipolarHV.from_signs(a_signs)
        b = BipolarHV.from_signs(b_signs)
        if not np.array_equal(a.to_signs(), a_signs):
            return False, f"pair {k}: pack/unpack round-trip failed at dim {dim}"
        got = bipolar_dot(a, b)
        want = int(a_signs.astype(np.int64) @ b_signs.astype(np.int64))
        if got != want:
            return False, f"pair {k}: dot {got} != {want} at dim {dim}"
        if abs(got) > dim or (got - dim) % 2 != 0:
            return False, f"pair {k}: dot {got} out of range/parity at dim {dim}"
        if bipolar_dot(a, a) != dim:
            return False, f"pair {k}: self-dot != dim at dim {dim}"
        t = int(rng.integers(0, 2 * dim + 3))
        real = rng.standard_normal(dim, dtype=np.float32)
        rolled = permute(real, t)
        for d in (0, dim // 2, dim - 1):
            if rolled[d] != real[(d - t) % dim]:
                return False, f"pair {k}: permute index mismatch at dim {dim}"
    return True, f"{pairs} random pairs over dims {HV_DIMS}"


def encoder_oracle_suite(trials: int = 200, seed: int = 2) -> tuple[bool, str]:
    """Optimized encoder vs scalar reference, bit for bit."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    dims = (8, 64, 100)
    for k in range(trials):
        dim = int(dims[k % len(dims)])
        patch = int(rng.integers(1, 4))
        stride = patch if rng.integers(0, 2) else 1
        h_pad = int(rng.integers(patch, patch + 5))
        w_pad = int(rng.integers(patch, patch + 5))
        levels = int(rng.integers(2, 9))
        banks = generate_banks(dim, (h_pad, w_pad), levels, seed=1000 + k)
        level_img = rng.integers(0, levels, size=(h_pad, w_pad)).astype(np.int32)
        fast_real = encoding.encode_image_real(level_img, banks, patch, stride)
        ref_signs, ref_real = reference.naive_encode(level_img, banks, patch, stride)
        if not np.array_equal(fast_real.view(np.uint32), ref_real.view(np.uint32)):
            return False, (
                f"trial {k}: real accumulators differ "
                f"(dim={dim}, patch={patch}, stride={stride})"
            )
        fast_hv = encoding.encode_image(level_img, banks, patch, stride)
        if not np.array_equal(fast_hv.to_signs(), ref_signs):
            return False, f"trial {k}: signs differ (dim={dim}, patch={patch})"
    return True, f"{trials} random (dim, patch, stride) triples matched bit-for-bit"


def quantize_suite() -> tuple[bool, str]:
    """Every byte of a /255-normalized image maps back to itself."""
    raw = np.arange(256, dtype=np.uint8)
    x = raw.astype(np.float32) / np.float32(255.0)
    lvl = encoding.quantize_image(x.reshape(16, 16)).reshape(-1)
    if not np.array_equal(lvl, raw.astype(np.int32)):
        bad = np.nonzero(lvl != raw)[0]
        return False, f"bytes misquantized: {bad[:8].tolist()}..."
    for v, want in ((0.0, 0), (1.0, 255), (-0.5, 0), (2.0, 255)):
        got = reference.naive_quantize(v, 256, 1.0 / 255.0, 0.0)
        if got != want:
            return False, f"naive_quantize({v}) = {got}, expected {want}"
    return True, "all 256 byte values round-trip exactly"


def learner_suite(seeds: int = 10) -> tuple[bool, str]:
    """Separable two-class task: high train accuracy, errors trending down."""
    dim, levels, patch = 1000, 4, 2
    transitions_ok = 0
    transitions_all = 0
    final_accs = []
    for s in range(seeds):
        images, labels = make_synthetic_images(2, 50, grid=(8, 8), block=2, seed=s)
        banks = generate_banks(dim, (8, 8), levels, seed=77 + s)
        lvl = encoding.quantize_image(images, levels=levels)
        words = encoding.encode_images(lvl, banks, patch, patch)
        protos, history = learning.train_prototypes(
            words, labels, num_classes=2, dim=dim, shuffle_seed=s
        )
        raw = scoring.raw_scores_batch(words, protos.require_packed(), dim)
        acc = float(np.mean(scoring.predict_from_raw(raw) == labels))
        final_accs.append(acc)
        for a, b in zip(history, history[1:]):
            transitions_all += 1
            if b <= a:
                transitions_ok += 1
    mono = transitions_ok / transitions_all if transitions_all else 1.0
    worst = min(final_accs)
    ok = worst >= 0.95 and mono >= 0.80
    return ok, (
        f"worst train acc {worst:.3f} (need >= 0.95), "
        f"mistake transitions non-increasing {mono:.2f} (need >= 0.80)"
    )


def similarity_suite(cases: int = 1000, seed: int = 6) -> tuple[bool, str]:
    """Packed-popcount scoring vs a naive per-element sign loop."""
    ones = np.ones(8, dtype=np.int8)
    mixed = np.array([1, 1, -1, -1], dtype=np.int8)
    flipped = np.array([1, -1, -1, 1], dtype=np.int8)
    hand = (
        (ones, ones, 1.0),
        (ones, -ones, -1.0),
        (mixed, flipped, 0.0),
    )
    for a, b, want in hand:
        q = BipolarHV.from_signs(a)
        raw = scoring.raw_scores(q.words, pack_bits(b > 0), a.size)
        if float(scoring.normalize_scores(raw, a.size)[0]) != want:
            return False, f"hand case {want} gave {raw}"
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    dims = (7, 64, 100)
    for k in range(cases):
        dim = int(dims[k % len(dims)])
        c = int(rng.integers(2, 9))
        q_signs = rng.integers(0, 2, size=dim).astype(np.int8) * 2 - 1
        p_signs = rng.integers(0, 2, size=(c, dim)).astype(np.int8) * 2 - 1
        q = BipolarHV.from_signs(q_signs)
        raw = scoring.raw_scores(q.words, pack_bits(p_signs > 0), dim)
        naive = np.array(
            [reference.naive_bipolar_dot(q_signs, p_signs[j]) for j in range(c)],
            dtype=np.int64,
        )
        if not np.array_equal(raw, naive):
            return False, f"case {k}: raw scores differ at dim {dim}"
        if int(scoring.predict_from_raw(raw)) != int(np.argmax(naive)):
            return False, f"case {k}: argmax differs at dim {dim}"
    return True, f"{cases} random cases: popcount path == naive sign loop"


def cycle_model_suite(configs: int = 50, seed: int = 3) -> tuple[bool, str]:
    """Event-counted cycles equal the closed form on random shapes."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    for k in range(configs):
        dim = int(rng.integers(64, 2000))
        patch = int(rng.integers(1, 5))
        stride = patch
        h_pad = patch * int(rng.integers(1, 5))
        w_pad = patch * int(rng.integers(1, 5))
        num_classes = int(rng.integers(2, 12))
        cfg = accel.AccelConfig(
            p_d=int(rng.integers(1, 512)), p_patch=int(rng.integers(1, 40))
        )
        levels = 4
        banks = generate_banks(dim, (h_pad, w_pad), levels, seed=500 + k)
        lvl_img = rng.integers(0, levels, size=(h_pad, w_pad)).astype(np.int32)
        protos = pack_bits(
            rng.integers(0, 2, size=(num_classes, dim)).astype(np.uint8)
        )
        rep = accel.simulate_image(lvl_img, banks, patch, stride, protos, cfg)
        k_h, k_w = encoding.patch_grid(h_pad, w_pad, patch, stride)
        form = accel.closed_form_cycles(dim, k_h * k_w, patch, num_classes, cfg)
        naive = reference.naive_total_cycles(
            dim, k_h * k_w, patch, num_classes, cfg.p_d, cfg.p_patch
        )
        if rep.cycles.total != form.total or form.total != naive:
            return False, (
                f"config {k}: event {rep.cycles.total} vs closed {form.total} "
                f"vs naive {naive}"
            )
        if rep.cycles.patch_encode != form.patch_encode:
            return False, f"config {k}: patch_encode event/closed mismatch"
    return True, f"{configs} random configs: event == closed form == naive count"


def simulator_equivalence_suite(
    num_images: int = 24, seed: int = 4
) -> tuple[bool, str]:
    """Simulator vs software route on synthetic images: HVs, scores, labels."""
    dim, levels, patch = 600, 4, 2
    images, labels = make_synthetic_images(4, num_images // 4, seed=seed)
    banks = generate_banks(dim, (8, 8), levels, seed=9)
    lvl = encoding.quantize_image(images, levels=levels)
    words = encoding.encode_images(lvl, banks, patch, patch)
    protos, _ = learning.train_prototypes(
        words, labels, num_classes=4, dim=dim, epochs=2
    )
    proto_words = protos.require_packed()
    sw_raw = scoring.raw_scores_batch(words, proto_words, dim)
    sw_labels = scoring.predict_from_raw(sw_raw)
    # the one-lane config is very slow per image, so it gets a small slice
    for cfg, count in (
        (accel.AccelConfig(), num_images),
        (accel.AccelConfig(p_d=100, p_patch=7), num_images),
        (accel.AccelConfig(p_d=1, p_patch=1), 4),
    ):
        sim_labels, sim_raw, sim_words = accel.simulate_images(
            lvl[:count], banks, patch, patch, proto_words, cfg
        )
        if not np.array_equal(sim_words, words[:count]):
            return False, f"{cfg}: image HVs differ from software encoder"
        if not np.array_equal(sim_raw, sw_raw[:count]):
            return False, f"{cfg}: raw scores differ"
        if not np.array_equal(sim_labels, sw_labels[:count]):
            return False, f"{cfg}: predicted labels differ"
    return True, f"{num_images} images x 3 hardware shapes, zero mismatches"


def determinism_suite() -> tuple[bool, str]:
    """Same seeds give identical encodings regardless of worker count."""
    images, labels = make_synthetic_images(3, 8, seed=11)
    lvl = encoding.quantize_image(images, levels=4)
    banks_a = generate_banks(400, (8, 8), 4, seed=21)
    banks_b = generate_banks(400, (8, 8), 4, seed=21)
    if not (
        np.array_equal(banks_a.base, banks_b.base)
        and np.array_equal(banks_a.levels, banks_b.levels)
    ):
        return False, "bank regeneration is not bit-identical"
    serial = encoding.encode_images(lvl, banks_a, 2, 2, workers=1)
    parallel = encoding.encode_images(lvl, banks_a, 2, 2, workers=4)
    if not np.array_equal(serial, parallel):
        return False, "worker count changed encodings"
    p1, h1 = learning.train_prototypes(serial, labels, 3, 400, shuffle_seed=5)
    p2, h2 = learning.train_prototypes(serial, labels, 3, 400, shuffle_seed=5)
    if h1 != h2 or not np.array_equal(p1.require_packed(), p2.require_packed()):
        return False, "repeated training diverged"
    return True, "banks, encodings, and training are run-to-run identical"


def run_all(pairs: int = 1000, trials: int = 200) -> list[SuiteResult]:
    return [
        _timed("hv-dims", lambda: hv_dims_suite(pairs=pairs)),
        _timed("quantize", quantize_suite),
        _timed("encoder-oracle", lambda: encoder_oracle_suite(trials=trials)),
        _timed("learner", learner_suite),
        _timed("similarity", similarity_suite),
        _timed("cycle-model", cycle_model_suite),
        _timed("simulator-equivalence", simulator_equivalence_suite),
        _timed("determinism", determinism_suite),
    ]
