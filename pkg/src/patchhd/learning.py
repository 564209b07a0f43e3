"""Online prototype learning over encoded hypervectors.

Training has two phases:
    1. bundle pass: every training HV is added into its class accumulator
    2. retraining: for a fixed number of epochs, samples are visited in a
       seeded shuffled order; on a misclassification the true class gains a
       confidence-scaled copy of the sample HV and the predicted class loses
       one

During retraining similarity is cosine against the real-valued prototypes,
s_c = (H . C_c) / (sqrt(D) * ||C_c||), using sqrt(D) as the norm of the
bipolar sample HV; a zero-norm prototype scores 0. The update weight is
1 - sigma with sigma = (s + 1) / 2, so confident mistakes move prototypes
more than marginal ones. After training, prototypes are frozen by sign into
packed bipolar vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hv import pack_bits, unpack_bits

DEFAULT_LR = 0.035
DEFAULT_EPOCHS = 5


class PrototypeStateError(RuntimeError):
    """Raised when an operation needs prototype state that is not present."""


@dataclass
class ClassPrototypes:
    """Per-class prototype vectors, real during training, packed after freeze.

    A freshly constructed instance holds float32 accumulators. `freeze()`
    fills `packed` with the sign-bipolarized words used for inference.
    Instances restored from a model file may be packed-only (real=None).
    """

    dim: int
    real: np.ndarray | None = field(default=None, repr=False)
    packed: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def zeros(cls, num_classes: int, dim: int) -> "ClassPrototypes":
        if num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {num_classes}")
        return cls(dim=dim, real=np.zeros((num_classes, dim), dtype=np.float32))

    @classmethod
    def from_packed(cls, words: np.ndarray, dim: int) -> "ClassPrototypes":
        words = np.ascontiguousarray(words, dtype="<u8")
        return cls(dim=dim, packed=words)

    @property
    def num_classes(self) -> int:
        arr = self.real if self.real is not None else self.packed
        if arr is None:
            raise PrototypeStateError("prototypes hold neither real nor packed state")
        return arr.shape[0]

    def require_real(self) -> np.ndarray:
        if self.real is None:
            raise PrototypeStateError(
                "real-valued prototypes are unavailable (packed-only model)"
            )
        return self.real

    def require_packed(self) -> np.ndarray:
        if self.packed is None:
            raise PrototypeStateError("prototypes are not frozen yet; call freeze()")
        return self.packed

    def freeze(self) -> None:
        """Bipolarize the real prototypes (entry >= 0 maps to +1) and pack them."""
        if self.packed is not None:
            raise PrototypeStateError("prototypes are already frozen")
        real = self.require_real()
        self.packed = pack_bits(real >= 0)
        self.packed.setflags(write=False)


def _signs_f32(words: np.ndarray, dim: int) -> np.ndarray:
    bits = unpack_bits(words, dim)
    return bits.astype(np.float32) * 2.0 - 1.0


def bundle_pass(
    protos: ClassPrototypes, hv_words: np.ndarray, labels: np.ndarray
) -> None:
    """Add every sample HV into its class accumulator.

    Each dimension's contribution is (#samples with +1) - (#samples with -1),
    an exact integer, so the result is independent of sample order.
    """
    real = protos.require_real()
    hv_words = np.asarray(hv_words, dtype="<u8")
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= protos.num_classes):
        raise ValueError("labels out of range for the prototype set")
    for c in range(protos.num_classes):
        rows = hv_words[labels == c]
        if rows.shape[0] == 0:
            continue
        ones = unpack_bits(rows, protos.dim).sum(axis=0, dtype=np.int64)
        real[c] += (2 * ones - rows.shape[0]).astype(np.float32)


def cosine_scores(
    real_protos: np.ndarray, h_signs: np.ndarray, norms: np.ndarray, dim: int
) -> np.ndarray:
    """Cosine of a bipolar sample against each real prototype (float64).

    Zero-norm prototypes score 0 rather than dividing by zero.
    """
    dots = np.einsum("cd,d->c", real_protos, h_signs, dtype=np.float64, optimize=False)
    denom = np.sqrt(float(dim)) * norms
    return np.divide(dots, denom, out=np.zeros_like(dots), where=norms > 0)


def _row_norms(real: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("cd,cd->c", real, real, dtype=np.float64))


def _epoch_order(shuffle_seed: int, epoch: int, n: int) -> np.ndarray:
    key = np.array([shuffle_seed, epoch], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.permutation(n)


def retrain(
    protos: ClassPrototypes,
    hv_words: np.ndarray,
    labels: np.ndarray,
    lr: float = DEFAULT_LR,
    epochs: int = DEFAULT_EPOCHS,
    shuffle_seed: int = 0,
    verify_updates: bool = False,
) -> list[int]:
    """Run error-driven retraining epochs; returns mistakes per epoch.

    Each epoch visits all samples in a shuffled order derived from
    (shuffle_seed, epoch), so a given seed fully determines the schedule.
    On a misclassification of sample H with true class y and prediction p:

        C_y += lr * (1 - sigma_y) * H
        C_p -= lr * (1 - sigma_p) * H

    with sigma = (cosine + 1) / 2. Correct predictions change nothing.

    With verify_updates=True every applied update is checked: the raw dot
    H . C_y must strictly increase whenever sigma_y < 1 (it grows by
    lr * (1 - sigma_y) * D). This instrumented mode is for tests; it slows
    the loop down.
    """
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    if protos.packed is not None:
        raise PrototypeStateError("prototypes are frozen; retrain before freeze()")
    real = protos.require_real()
    hv_words = np.asarray(hv_words, dtype="<u8")
    labels = np.asarray(labels)
    dim = protos.dim
    norms = _row_norms(real)
    mistakes_per_epoch: list[int] = []
    for epoch in range(epochs):
        order = _epoch_order(shuffle_seed, epoch, hv_words.shape[0])
        mistakes = 0
        for idx in order:
            h = _signs_f32(hv_words[idx], dim)
            s = cosine_scores(real, h, norms, dim)
            pred = int(np.argmax(s))
            y = int(labels[idx])
            if pred == y:
                continue
            sigma = (s + 1.0) / 2.0
            if verify_updates:
                before = float(np.dot(real[y].astype(np.float64), h))
            real[y] += np.float32(lr * (1.0 - sigma[y])) * h
            real[pred] -= np.float32(lr * (1.0 - sigma[pred])) * h
            if verify_updates and sigma[y] < 1.0:
                after = float(np.dot(real[y].astype(np.float64), h))
                if not after > before:
                    raise AssertionError(
                        f"update failed to raise H.C_y: {before} -> {after}"
                    )
            norms[y] = _row_norms(real[y : y + 1])[0]
            norms[pred] = _row_norms(real[pred : pred + 1])[0]
            mistakes += 1
        mistakes_per_epoch.append(mistakes)
    return mistakes_per_epoch


def train_prototypes(
    hv_words: np.ndarray,
    labels: np.ndarray,
    num_classes: int,
    dim: int,
    lr: float = DEFAULT_LR,
    epochs: int = DEFAULT_EPOCHS,
    shuffle_seed: int = 0,
) -> tuple[ClassPrototypes, list[int]]:
    """Bundle pass + retraining + freeze; returns prototypes and epoch mistakes."""
    protos = ClassPrototypes.zeros(num_classes, dim)
    bundle_pass(protos, hv_words, labels)
    history = retrain(
        protos, hv_words, labels, lr=lr, epochs=epochs, shuffle_seed=shuffle_seed
    )
    protos.freeze()
    return protos, history
