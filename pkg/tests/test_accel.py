"""Accelerator simulator: cycle model, dataflow equivalence, timing."""

import numpy as np
import pytest

from patchhd import accel, encoding, scoring
from patchhd import hv as hv_mod
from patchhd.hv import generate_banks, pack_bits
from patchhd.reference import naive_total_cycles
from patchhd.selftest import cycle_model_suite, simulator_equivalence_suite


def test_ceil_log2():
    assert accel.ceil_log2(1) == 0
    assert accel.ceil_log2(2) == 1
    assert accel.ceil_log2(10) == 4
    assert accel.ceil_log2(16) == 4
    assert accel.ceil_log2(17) == 5
    with pytest.raises(ValueError):
        accel.ceil_log2(0)


def test_config_validation():
    with pytest.raises(ValueError):
        accel.AccelConfig(p_d=0)
    with pytest.raises(ValueError):
        accel.AccelConfig(p_patch=0)
    with pytest.raises(ValueError):
        accel.AccelConfig(clock_mhz=0)


class TestClosedForm:
    def test_default_shape_frozen_values(self):
        # 10000 dims on 256 lanes, 100 patches on 16 processors, 10 classes
        cyc = accel.closed_form_cycles(10000, 100, 3, 10, accel.AccelConfig())
        assert cyc.segments == 40
        assert cyc.groups == 7
        assert cyc.patch_encode == 2520
        assert cyc.patch_proc_fill == 4
        assert cyc.adder_tree == 4
        assert cyc.similarity == 3
        assert cyc.argmax == 14
        assert cyc.total == 2545

    def test_matches_naive_schedule_walk(self):
        cfg = accel.AccelConfig(p_d=100, p_patch=7)
        cyc = accel.closed_form_cycles(10000, 100, 3, 10, cfg)
        assert cyc.total == naive_total_cycles(10000, 100, 3, 10, 100, 7)

    def test_fully_parallel_config_collapses_to_one_pass(self):
        # enough lanes for every dimension and a processor per patch:
        # a single segment and group leave just M^2 pixel steps plus the
        # pipeline depths and the class scan
        cfg = accel.AccelConfig(p_d=16384, p_patch=128)
        cyc = accel.closed_form_cycles(10000, 100, 3, 10, cfg)
        assert cyc.segments == 1
        assert cyc.groups == 1
        assert cyc.patch_encode == 9
        expected = (
            9 + cfg.patch_proc_depth + accel.ceil_log2(cfg.p_patch)
            + cfg.sim_depth + accel.ceil_log2(10) + 10
        )
        assert cyc.total == expected

    def test_total_is_component_sum(self):
        cyc = accel.closed_form_cycles(512, 36, 2, 4, accel.AccelConfig(p_d=33))
        parts = (
            cyc.patch_encode + cyc.patch_proc_fill + cyc.adder_tree
            + cyc.similarity + cyc.argmax
        )
        assert cyc.total == parts

    def test_monotone_in_parallelism(self):
        # more lanes or more patch processors never cost extra cycles
        grid = [64, 128, 256, 512]
        totals = {}
        for p_d in grid:
            for p_patch in [4, 8, 16, 32]:
                cfg = accel.AccelConfig(p_d=p_d, p_patch=p_patch)
                totals[(p_d, p_patch)] = accel.closed_form_cycles(
                    10000, 100, 3, 10, cfg
                ).total
        for i in range(1, len(grid)):
            for p_patch in [4, 8, 16, 32]:
                assert totals[(grid[i], p_patch)] <= totals[(grid[i - 1], p_patch)]
        for p_d in grid:
            for j in range(1, 4):
                pp = [4, 8, 16, 32]
                # adder tree depth grows with log2(p_patch); the encode win
                # must still dominate on this shape
                assert totals[(p_d, pp[j])] <= totals[(p_d, pp[j - 1])]

    def test_event_counts_match_closed_form_random_configs(self):
        ok, detail = cycle_model_suite(configs=50)
        assert ok, detail


class TestTiming:
    def test_default_latency_and_throughput(self):
        assert accel.latency_us(2545, 250.0) == pytest.approx(10.18)
        assert accel.throughput_img_per_s(2545, 250.0) == pytest.approx(
            98231.8, abs=0.1
        )

    def test_roundtrip_relation(self):
        lat = accel.latency_us(1000, 100.0)
        thr = accel.throughput_img_per_s(1000, 100.0)
        assert thr * lat == pytest.approx(1e6)


class TestSimulate:
    def _setup(self, toy_data, toy_banks):
        _, lvl, _ = toy_data
        rng = np.random.default_rng(5)
        protos = pack_bits(rng.integers(0, 2, size=(4, toy_banks.dim)))
        return lvl, protos

    def test_report_consistency(self, toy_data, toy_banks):
        lvl, protos = self._setup(toy_data, toy_banks)
        cfg = accel.AccelConfig(p_d=64, p_patch=5)
        rep = accel.simulate_image(lvl[0], toy_banks, 2, 2, protos, cfg)
        assert rep.raw_scores.shape == (4,)
        assert np.array_equal(rep.scores, rep.raw_scores / toy_banks.dim)
        assert rep.predicted_label == int(np.argmax(rep.raw_scores))
        form = accel.closed_form_cycles(toy_banks.dim, 16, 2, 4, cfg)
        assert rep.cycles.total == form.total
        assert rep.latency_us == accel.latency_us(form.total, cfg.clock_mhz)

    def test_matches_software_route(self, toy_data, toy_banks):
        lvl, protos = self._setup(toy_data, toy_banks)
        cfg = accel.AccelConfig(p_d=100, p_patch=7)
        sw_words = encoding.encode_images(lvl[:6], toy_banks, 2, 2)
        sw_raw = scoring.raw_scores_batch(sw_words, protos, toy_banks.dim)
        labels, raw, words = accel.simulate_images(
            lvl[:6], toy_banks, 2, 2, protos, cfg
        )
        assert np.array_equal(words, sw_words)
        assert np.array_equal(raw, sw_raw)
        assert np.array_equal(labels, scoring.predict_from_raw(sw_raw))

    def test_equivalence_suite(self):
        ok, detail = simulator_equivalence_suite()
        assert ok, detail

    def test_worker_count_does_not_change_results(self, toy_data, toy_banks):
        lvl, protos = self._setup(toy_data, toy_banks)
        serial = accel.simulate_images(lvl[:8], toy_banks, 2, 2, protos)
        forked = accel.simulate_images(lvl[:8], toy_banks, 2, 2, protos, workers=4)
        for a, b in zip(serial, forked):
            assert np.array_equal(a, b)

    def test_argmax_tie_prefers_lowest_class(self, toy_data, toy_banks):
        lvl, _ = self._setup(toy_data, toy_banks)
        one = encoding.encode_image(lvl[0], toy_banks, 2, 2)
        protos = np.stack([one.words, one.words])  # identical -> tied scores
        rep = accel.simulate_image(lvl[0], toy_banks, 2, 2, protos)
        assert rep.predicted_label == 0
        assert rep.raw_scores[0] == rep.raw_scores[1] == toy_banks.dim

    def test_report_notes_unmodeled_transfers(self, toy_data, toy_banks):
        lvl, protos = self._setup(toy_data, toy_banks)
        rep = accel.simulate_image(lvl[0], toy_banks, 2, 2, protos)
        assert rep.host_transfers == "not modeled"


class TestSweep:
    def test_one_report_per_config_same_function(self, toy_data, toy_banks):
        _, lvl, _ = toy_data
        rng = np.random.default_rng(5)
        protos = pack_bits(rng.integers(0, 2, size=(4, toy_banks.dim)))
        configs = [
            accel.AccelConfig(p_d=p_d, p_patch=p_patch)
            for p_d in (64, 512)
            for p_patch in (3, 16)
        ]
        reports = accel.sweep(configs, lvl[0], toy_banks, 2, 2, protos)
        assert len(reports) == len(configs)
        first = reports[0]
        for rep in reports[1:]:
            assert rep.predicted_label == first.predicted_label
            assert np.array_equal(rep.raw_scores, first.raw_scores)
            assert np.array_equal(rep.hv_words, first.hv_words)
        totals = [r.cycles.total for r in reports]
        assert len(set(totals)) > 1  # timing differs even when function agrees

    def test_rejects_empty_config_list(self, toy_data, toy_banks):
        _, lvl, _ = toy_data
        with pytest.raises(ValueError, match="non-empty"):
            accel.sweep([], lvl[0], toy_banks, 2, 2, np.zeros((1, 8), dtype="<u8"))


class TestRouteIndependence:
    def test_broken_rotation_in_software_is_detected(
        self, toy_data, toy_banks, monkeypatch
    ):
        """The simulator must not inherit bugs injected into the encoder."""
        _, lvl, _ = toy_data
        rng = np.random.default_rng(6)
        protos = pack_bits(rng.integers(0, 2, size=(3, toy_banks.dim)))
        good = encoding.encode_image(lvl[0], toy_banks, 2, 2)

        def skewed_roll(h, t):
            return np.roll(h, (int(t) + 1) % h.shape[-1])

        monkeypatch.setattr(hv_mod, "permute", skewed_roll)
        broken = encoding.encode_image(lvl[0], toy_banks, 2, 2)
        rep = accel.simulate_image(lvl[0], toy_banks, 2, 2, protos)
        assert broken != good  # the fault did take effect in software
        assert np.array_equal(rep.hv_words, good.words)  # simulator unaffected
