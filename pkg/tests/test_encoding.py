"""Quantization, patch geometry, and encoder/oracle agreement."""

import numpy as np
import pytest

from patchhd import encoding
from patchhd.hv import generate_banks
from patchhd.reference import naive_encode, naive_quantize
from patchhd.selftest import encoder_oracle_suite


class TestQuantize:
    def test_every_byte_round_trips(self):
        raw = np.arange(256, dtype=np.uint8)
        x = raw.astype(np.float32) / np.float32(255.0)
        assert np.array_equal(encoding.quantize_image(x), raw.astype(np.int32))

    def test_matches_scalar_rule(self):
        rng = np.random.default_rng(0)
        xs = rng.uniform(-0.2, 1.2, size=50)
        got = encoding.quantize_image(xs, levels=16, scale=0.07, offset=0.5)
        want = [naive_quantize(float(v), 16, 0.07, 0.5) for v in xs]
        assert got.tolist() == want

    def test_clips_to_valid_range(self):
        x = np.array([-1.0, 0.0, 1.0, 5.0])
        lvl = encoding.quantize_image(x)
        assert lvl.tolist() == [0, 0, 255, 255]

    def test_rejects_single_level(self):
        with pytest.raises(ValueError, match="levels"):
            encoding.quantize_image(np.zeros(3), levels=1)


class TestPatchGrid:
    @pytest.mark.parametrize(
        "h,w,m,r,want",
        [
            (32, 32, 3, 3, (10, 10)),
            (32, 32, 3, 1, (30, 30)),
            (8, 8, 2, 2, (4, 4)),
            (5, 7, 5, 1, (1, 3)),
            (9, 9, 4, 3, (2, 2)),  # trailing pixels beyond the last patch drop
        ],
    )
    def test_known_grids(self, h, w, m, r, want):
        assert encoding.patch_grid(h, w, m, r) == want

    def test_rejects_oversized_patch(self):
        with pytest.raises(ValueError, match="exceeds"):
            encoding.patch_grid(4, 4, 5, 1)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            encoding.patch_grid(8, 8, 0, 1)
        with pytest.raises(ValueError):
            encoding.patch_grid(8, 8, 2, 0)


class TestEncoder:
    def test_matches_scalar_oracle_bit_for_bit(self):
        banks = generate_banks(100, (6, 6), 4, seed=5)
        rng = np.random.default_rng(1)
        lvl = rng.integers(0, 4, size=(6, 6)).astype(np.int32)
        fast = encoding.encode_image_real(lvl, banks, 2, 2)
        ref_signs, ref_real = naive_encode(lvl, banks, 2, 2)
        assert np.array_equal(fast.view(np.uint32), ref_real.view(np.uint32))
        assert np.array_equal(
            encoding.encode_image(lvl, banks, 2, 2).to_signs(), ref_signs
        )

    def test_oracle_suite_200_triples(self):
        ok, detail = encoder_oracle_suite(trials=200)
        assert ok, detail

    def test_single_patch_is_unrotated_pixel_sum(self):
        banks = generate_banks(64, (2, 2), 3, seed=6)
        lvl = np.array([[0, 1], [2, 0]], dtype=np.int32)
        got = encoding.encode_image_real(lvl, banks, 2, 2)
        acc = np.zeros(64, dtype=np.float32)
        for i in range(2):
            for j in range(2):
                acc += banks.base[i, j] * banks.levels[lvl[i, j]]
        assert np.array_equal(got, acc)

    def test_overlapping_stride_uses_shared_pixels(self):
        banks = generate_banks(80, (3, 3), 2, seed=7)
        lvl = np.zeros((3, 3), dtype=np.int32)
        # stride 1 with patch 2 gives a 2x2 patch grid on a 3x3 image
        out = encoding.encode_image_real(lvl, banks, 2, 1)
        ref_signs, ref_real = naive_encode(lvl, banks, 2, 1)
        assert np.array_equal(out.view(np.uint32), ref_real.view(np.uint32))

    def test_rejects_wrong_image_shape(self):
        banks = generate_banks(32, (4, 4), 4, seed=8)
        with pytest.raises(ValueError, match="does not match bank grid"):
            encoding.encode_image_real(np.zeros((3, 4), dtype=np.int32), banks, 2, 2)

    def test_rejects_out_of_range_levels(self):
        banks = generate_banks(32, (2, 2), 4, seed=8)
        bad = np.full((2, 2), 4, dtype=np.int32)
        with pytest.raises(ValueError, match="out of range"):
            encoding.encode_image_real(bad, banks, 2, 2)

    def test_image_composes_from_patch_and_pixel_helpers(self):
        # image HV = sum over patches of rotate(patch HV, t), and
        # patch HV = sum over its pixels of position*level binds
        banks = generate_banks(96, (6, 6), 5, seed=9)
        rng = np.random.default_rng(2)
        lvl = rng.integers(0, 5, size=(6, 6)).astype(np.int32)
        patch, stride = 3, 3
        image_hv = encoding.encode_image_real(lvl, banks, patch, stride)
        acc = np.zeros(96, dtype=np.float32)
        for gi in range(2):
            for gj in range(2):
                p = encoding.encode_patch(lvl, banks, gi, gj, patch, stride)
                pix = np.zeros(96, dtype=np.float32)
                for di in range(patch):
                    for dj in range(patch):
                        i, j = gi * stride + di, gj * stride + dj
                        pix += encoding.encode_pixel(i, j, lvl[i, j], banks)
                assert np.array_equal(p, pix)
                acc += np.roll(p, (gi * 2 + gj) % 96)
        assert np.array_equal(image_hv.view(np.uint32), acc.view(np.uint32))


class TestEncoderSensitivity:
    def test_one_pixel_extreme_change_alters_full_width_hv(self):
        # a single pixel flipped between the extreme intensity levels must
        # change the image HV; a collision at this width would be
        # astronomically unlikely, so zero collisions are tolerated
        dim, levels, patch = 10000, 256, 3
        rng = np.random.default_rng(11)
        for draw in range(20):
            banks = generate_banks(dim, (6, 6), levels, seed=3000 + draw)
            lvl = rng.integers(0, levels, size=(6, 6)).astype(np.int32)
            i, j = rng.integers(0, 6, size=2)
            low, high = lvl.copy(), lvl.copy()
            low[i, j] = 0
            high[i, j] = levels - 1
            a = encoding.encode_image(low, banks, patch, patch)
            b = encoding.encode_image(high, banks, patch, patch)
            assert not np.array_equal(a.words, b.words), f"draw {draw} collided"


class TestFaultInjection:
    def test_mutated_permutation_sign_is_caught_by_oracle_suite(self, monkeypatch):
        from patchhd import hv
        from patchhd.selftest import encoder_oracle_suite

        real_permute = hv.permute
        monkeypatch.setattr(
            hv, "permute", lambda values, shift: real_permute(values, -shift)
        )
        ok, detail = encoder_oracle_suite(trials=30)
        assert not ok
        assert "differ" in detail


class TestBatchEncode:
    def test_worker_count_does_not_change_output(self, toy_data, toy_banks):
        _, lvl, _ = toy_data
        serial = encoding.encode_images(lvl, toy_banks, 2, 2, workers=1)
        forked = encoding.encode_images(lvl, toy_banks, 2, 2, workers=3)
        assert np.array_equal(serial, forked)

    def test_rows_match_single_image_encoding(self, toy_data, toy_banks):
        _, lvl, _ = toy_data
        batch = encoding.encode_images(lvl[:3], toy_banks, 2, 2)
        for k in range(3):
            one = encoding.encode_image(lvl[k], toy_banks, 2, 2)
            assert np.array_equal(batch[k], one.words)
