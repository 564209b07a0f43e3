"""Similarity scoring and class selection on packed bipolar vectors.

Inference works entirely in the packed domain: the inner product of two
{-1,+1}^D vectors is D - 2 * popcount(a XOR b), an integer in [-D, +D] with
the same parity as D. The predicted class is the argmax of the raw integer
scores, ties resolved to the lowest class index.
"""

from __future__ import annotations

import numpy as np

from .encoding import encode_images
from .hv import WORD_BITS, BipolarHV
from .learning import ClassPrototypes


def raw_scores(query_words: np.ndarray, proto_words: np.ndarray, dim: int) -> np.ndarray:
    """Integer inner products of one packed query against C packed prototypes.

    Returns an int64 array of length C.
    """
    query_words = np.asarray(query_words, dtype="<u8")
    proto_words = np.asarray(proto_words, dtype="<u8")
    mismatches = np.bitwise_count(proto_words ^ query_words[None, :]).sum(
        axis=1, dtype=np.int64
    )
    return dim - 2 * mismatches


def raw_scores_batch(
    query_words: np.ndarray, proto_words: np.ndarray, dim: int
) -> np.ndarray:
    """Integer inner products for a batch of queries; (N, C) int64."""
    query_words = np.asarray(query_words, dtype="<u8")
    proto_words = np.asarray(proto_words, dtype="<u8")
    n = query_words.shape[0]
    c = proto_words.shape[0]
    out = np.empty((n, c), dtype=np.int64)
    # one xor per class keeps peak memory at N x n_words
    for j in range(c):
        out[:, j] = np.bitwise_count(query_words ^ proto_words[j]).sum(
            axis=1, dtype=np.int64
        )
    return dim - 2 * out


def normalize_scores(raw: np.ndarray, dim: int) -> np.ndarray:
    """Scale raw integer scores into [-1, 1] (float64)."""
    return np.asarray(raw, dtype=np.float64) / dim


def predict_from_raw(raw: np.ndarray) -> np.ndarray:
    """Argmax over the last axis; ties go to the lowest class index."""
    return np.argmax(raw, axis=-1)


def score(query: BipolarHV, protos: ClassPrototypes) -> np.ndarray:
    """Normalized similarity of a query HV against frozen class prototypes.

    Returns a float64 array of length C with entries in [-1, 1].
    """
    packed = protos.require_packed()
    return normalize_scores(raw_scores(query.words, packed, query.dim), query.dim)


def predict(query: BipolarHV, protos: ClassPrototypes) -> tuple[int, np.ndarray]:
    """Predicted class and normalized scores for one query HV.

    The argmax runs on the raw integer dots (no float ties); lowest class
    index wins exact ties. Scores come along for telemetry.
    """
    packed = protos.require_packed()
    raw = raw_scores(query.words, packed, query.dim)
    return int(predict_from_raw(raw)), normalize_scores(raw, query.dim)


def evaluate(
    query_words: np.ndarray, labels: np.ndarray, protos: ClassPrototypes
) -> tuple[float, np.ndarray]:
    """Accuracy and confusion matrix for a batch of packed query HVs.

    The confusion matrix is (C, C) int64 with rows indexed by true label and
    columns by predicted label.
    """
    packed = protos.require_packed()
    labels = np.asarray(labels, dtype=np.int64)
    c = protos.num_classes
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError("labels out of range for the prototype set")
    raw = raw_scores_batch(query_words, packed, protos.dim)
    predicted = predict_from_raw(raw)
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (labels, predicted), 1)
    accuracy = float(np.mean(predicted == labels)) if labels.size else 0.0
    return accuracy, confusion


def evaluate_images(
    level_images: np.ndarray,
    labels: np.ndarray,
    banks,
    patch: int,
    stride: int,
    protos: ClassPrototypes,
    workers: int = 1,
) -> tuple[float, np.ndarray]:
    """Encode a quantized image batch and evaluate it against prototypes.

    Encoding parallelizes across samples; the count reduction is a fixed
    vectorized pass, so the result is worker-count independent.
    """
    words = encode_images(level_images, banks, patch, stride, workers=workers)
    return evaluate(words, labels, protos)


def num_words(dim: int) -> int:
    return (dim + WORD_BITS - 1) // WORD_BITS
