"""Packed-domain similarity scoring and argmax selection."""

import numpy as np
import pytest

from patchhd import scoring
from patchhd.hv import BipolarHV, pack_bits
from patchhd.learning import ClassPrototypes, PrototypeStateError
from patchhd.reference import naive_bipolar_dot
from patchhd.selftest import similarity_suite


def _random_signs(rng, shape):
    return rng.integers(0, 2, size=shape).astype(np.int8) * 2 - 1


def test_raw_scores_match_naive_dot():
    rng = np.random.default_rng(0)
    for dim in (1, 64, 100, 130):
        q_signs = _random_signs(rng, dim)
        p_signs = _random_signs(rng, (5, dim))
        raw = scoring.raw_scores(
            pack_bits(q_signs >= 0), pack_bits(p_signs >= 0), dim
        )
        for c in range(5):
            assert raw[c] == naive_bipolar_dot(q_signs, p_signs[c])


def test_raw_scores_bounds_and_parity():
    rng = np.random.default_rng(1)
    dim = 101
    q = pack_bits(_random_signs(rng, dim) >= 0)
    p = pack_bits(_random_signs(rng, (8, dim)) >= 0)
    raw = scoring.raw_scores(q, p, dim)
    assert (np.abs(raw) <= dim).all()
    # each score flips parity with dim: raw = dim - 2 * mismatches
    assert ((raw - dim) % 2 == 0).all()


def test_batch_matches_single_queries():
    rng = np.random.default_rng(2)
    dim = 96
    queries = pack_bits(_random_signs(rng, (7, dim)) >= 0)
    protos = pack_bits(_random_signs(rng, (3, dim)) >= 0)
    batch = scoring.raw_scores_batch(queries, protos, dim)
    assert batch.shape == (7, 3)
    for k in range(7):
        assert np.array_equal(batch[k], scoring.raw_scores(queries[k], protos, dim))


def test_self_similarity_is_dim():
    dim = 77
    signs = _random_signs(np.random.default_rng(3), dim)
    words = pack_bits(signs >= 0)
    assert scoring.raw_scores(words, words[None, :], dim)[0] == dim


def test_normalize_scores_unit_range():
    raw = np.array([-100, 0, 100])
    s = scoring.normalize_scores(raw, 100)
    assert s.tolist() == [-1.0, 0.0, 1.0]
    assert s.dtype == np.float64


def test_argmax_tie_goes_to_lowest_index():
    raw = np.array([3, 7, 7, 1])
    assert scoring.predict_from_raw(raw) == 1
    batch = np.array([[5, 5], [2, 9]])
    assert scoring.predict_from_raw(batch).tolist() == [0, 1]


def test_num_words():
    assert scoring.num_words(64) == 1
    assert scoring.num_words(65) == 2
    assert scoring.num_words(10000) == 157


def test_hand_worked_normalized_scores():
    ones = np.ones(8, dtype=np.int8)
    mixed = np.array([1, 1, -1, -1], dtype=np.int8)
    flipped = np.array([1, -1, -1, 1], dtype=np.int8)
    cases = (
        (ones, ones, 1.0),  # identical vectors
        (ones, -ones, -1.0),  # exact negation
        (mixed, flipped, 0.0),  # half agree, half disagree
    )
    for a, b, want in cases:
        raw = scoring.raw_scores(pack_bits(a >= 0), pack_bits(b >= 0)[None, :], a.size)
        assert float(scoring.normalize_scores(raw, a.size)[0]) == want


def test_predict_matches_float_dot_oracle_at_full_width():
    rng = np.random.default_rng(4)
    dim = 10000
    q_signs = _random_signs(rng, dim)
    p_signs = _random_signs(rng, (10, dim))
    protos = ClassPrototypes.from_packed(pack_bits(p_signs >= 0), dim)
    got, _ = scoring.predict(BipolarHV.from_signs(q_signs), protos)
    oracle = int(np.argmax(p_signs.astype(np.float64) @ q_signs.astype(np.float64)))
    assert got == oracle


def test_argmax_invariant_under_normalization():
    rng = np.random.default_rng(5)
    for _ in range(50):
        dim = int(rng.integers(8, 300))
        raw = scoring.raw_scores(
            pack_bits(_random_signs(rng, dim) >= 0),
            pack_bits(_random_signs(rng, (6, dim)) >= 0),
            dim,
        )
        assert scoring.predict_from_raw(raw) == scoring.predict_from_raw(
            scoring.normalize_scores(raw, dim)
        )


def test_score_and_predict_wrappers():
    rng = np.random.default_rng(6)
    dim = 130
    q_signs = _random_signs(rng, dim)
    p_signs = _random_signs(rng, (4, dim))
    q = BipolarHV.from_signs(q_signs)
    protos = ClassPrototypes.from_packed(pack_bits(p_signs >= 0), dim)
    s = scoring.score(q, protos)
    assert s.shape == (4,)
    assert (np.abs(s) <= 1.0).all()
    raw = scoring.raw_scores(q.words, protos.require_packed(), dim)
    assert np.array_equal(s, scoring.normalize_scores(raw, dim))
    label, telemetry = scoring.predict(q, protos)
    assert label == int(np.argmax(raw))
    assert np.array_equal(telemetry, s)


def test_negated_prototype_is_never_selected():
    # an all-zero accumulator freezes to all +1; its exact negation scores
    # -1, the minimum, so any other class wins
    rng = np.random.default_rng(12)
    dim = 96
    empty = ClassPrototypes.zeros(1, dim)
    empty.freeze()
    others = _random_signs(rng, (2, dim))
    packed = np.concatenate([empty.require_packed(), pack_bits(others >= 0)])
    protos = ClassPrototypes.from_packed(packed, dim)
    query = BipolarHV.from_signs(-np.ones(dim, dtype=np.int8))
    label, s = scoring.predict(query, protos)
    assert s[0] == -1.0
    assert label != 0


def test_score_requires_frozen_prototypes():
    protos = ClassPrototypes.zeros(3, 64)
    q = BipolarHV.from_signs(np.ones(64, dtype=np.int8))
    with pytest.raises(PrototypeStateError, match="freeze"):
        scoring.score(q, protos)
    with pytest.raises(PrototypeStateError, match="freeze"):
        scoring.predict(q, protos)


class TestEvaluate:
    def test_accuracy_and_confusion_totals(self):
        rng = np.random.default_rng(7)
        dim, n, c = 256, 40, 4
        words = pack_bits(rng.integers(0, 2, size=(n, dim)).astype(np.uint8))
        labels = rng.integers(0, c, size=n)
        protos = ClassPrototypes.from_packed(
            pack_bits(rng.integers(0, 2, size=(c, dim)).astype(np.uint8)), dim
        )
        accuracy, confusion = scoring.evaluate(words, labels, protos)
        assert confusion.shape == (c, c)
        assert confusion.sum() == n
        assert np.trace(confusion) == pytest.approx(accuracy * n)
        counts = np.bincount(labels, minlength=c)
        assert np.array_equal(confusion.sum(axis=1), counts)

    def test_perfect_prototypes_give_identity_confusion(self):
        rng = np.random.default_rng(8)
        dim, c = 192, 3
        p_bits = rng.integers(0, 2, size=(c, dim)).astype(np.uint8)
        protos = ClassPrototypes.from_packed(pack_bits(p_bits), dim)
        words = pack_bits(np.repeat(p_bits, 5, axis=0))
        labels = np.repeat(np.arange(c), 5)
        accuracy, confusion = scoring.evaluate(words, labels, protos)
        assert accuracy == 1.0
        assert np.array_equal(confusion, np.diag([5, 5, 5]))

    def test_label_out_of_range(self):
        protos = ClassPrototypes.from_packed(
            pack_bits(np.ones((2, 64), dtype=np.uint8)), 64
        )
        words = pack_bits(np.ones((1, 64), dtype=np.uint8))
        with pytest.raises(ValueError, match="out of range"):
            scoring.evaluate(words, np.array([2]), protos)

    def test_evaluate_images_matches_packed_word_path(self):
        from patchhd import encoding
        from patchhd.hv import generate_banks

        rng = np.random.default_rng(13)
        banks = generate_banks(128, (4, 4), 4, seed=30)
        lvl = rng.integers(0, 4, size=(12, 4, 4)).astype(np.int32)
        labels = rng.integers(0, 3, size=12)
        protos = ClassPrototypes.from_packed(
            pack_bits(rng.integers(0, 2, size=(3, 128)).astype(np.uint8)), 128
        )
        acc_a, conf_a = scoring.evaluate_images(lvl, labels, banks, 2, 2, protos)
        words = encoding.encode_images(lvl, banks, 2, 2)
        acc_b, conf_b = scoring.evaluate(words, labels, protos)
        assert acc_a == acc_b
        assert np.array_equal(conf_a, conf_b)
        acc_c, conf_c = scoring.evaluate_images(
            lvl, labels, banks, 2, 2, protos, workers=3
        )
        assert acc_c == acc_a
        assert np.array_equal(conf_c, conf_a)


def test_similarity_oracle_suite():
    ok, detail = similarity_suite(cases=1000)
    assert ok, detail
