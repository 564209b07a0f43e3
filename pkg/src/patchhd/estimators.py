"""Estimator-style interfaces over the functional core.

`HDCImageEncoder` is a stateless-ish transformer (fit only captures the
image grid and draws the codebooks) mapping float images to packed
hypervectors. `HDCImageClassifier` composes encoding, prototype training,
and packed-domain nearest-prototype inference behind the usual
fit / predict / decision_function surface.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import encoding, learning, scoring
from .hv import generate_banks
from .modelio import ModelParams, load_model, save_model


def _check_images(X) -> np.ndarray:
    X = check_array(X, allow_nd=True, dtype=[np.float32, np.float64])
    if X.ndim != 3:
        raise ValueError(f"expected images of shape (n, height, width), got {X.shape}")
    return X


class HDCImageEncoder(TransformerMixin, BaseEstimator):
    """Encode float images in [0, 1] into packed bipolar hypervectors.

    Parameters
    ----------
    dim : hypervector dimensionality D.
    patch : patch side length M.
    stride : patch stride r.
    levels : number of intensity quantization levels L.
    seed : codebook seed; equal seeds give bit-identical encodings.
    n_jobs : worker processes for batch encoding (None or 1 = serial).
    """

    def __init__(self, dim=10000, patch=3, stride=3, levels=256, seed=0, n_jobs=None):
        self.dim = dim
        self.patch = patch
        self.stride = stride
        self.levels = levels
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = _check_images(X)
        grid = (X.shape[1], X.shape[2])
        encoding.patch_grid(grid[0], grid[1], self.patch, self.stride)
        self.banks_ = generate_banks(self.dim, grid, self.levels, self.seed)
        return self

    def transform(self, X) -> np.ndarray:
        """Returns packed HV words, shape (n, ceil(dim / 64)), uint64."""
        check_is_fitted(self, "banks_")
        X = _check_images(X)
        if (X.shape[1], X.shape[2]) != self.banks_.grid:
            raise ValueError(
                f"image grid {X.shape[1:]} does not match fitted grid "
                f"{self.banks_.grid}"
            )
        lvl = encoding.quantize_image(X, levels=self.levels)
        return encoding.encode_images(
            lvl, self.banks_, self.patch, self.stride, workers=self.n_jobs or 1
        )


class HDCImageClassifier(ClassifierMixin, BaseEstimator):
    """Nearest-prototype hypervector classifier for small grayscale images.

    Training bundles every encoded sample into its class prototype, then runs
    error-driven retraining epochs and freezes the prototypes to bipolar
    vectors. Prediction encodes the input and picks the class with the
    highest packed-domain inner product, ties to the lowest class index.

    Parameters
    ----------
    dim : hypervector dimensionality D.
    patch : patch side length M.
    stride : patch stride r.
    levels : intensity quantization levels L.
    lr : retraining learning rate.
    epochs : retraining epochs (0 = bundling only).
    seed : codebook seed.
    shuffle_seed : seed for the per-epoch sample orders.
    n_jobs : worker processes for batch encoding.

    Attributes
    ----------
    classes_ : sorted unique labels seen in fit.
    prototypes_ : frozen class prototypes (packed, plus real accumulators).
    banks_ : the generated codebooks.
    mistakes_per_epoch_ : retraining error counts, one per epoch.
    """

    def __init__(
        self,
        dim=10000,
        patch=3,
        stride=3,
        levels=256,
        lr=learning.DEFAULT_LR,
        epochs=learning.DEFAULT_EPOCHS,
        seed=0,
        shuffle_seed=0,
        n_jobs=None,
    ):
        self.dim = dim
        self.patch = patch
        self.stride = stride
        self.levels = levels
        self.lr = lr
        self.epochs = epochs
        self.seed = seed
        self.shuffle_seed = shuffle_seed
        self.n_jobs = n_jobs

    def _encoder(self) -> HDCImageEncoder:
        return HDCImageEncoder(
            dim=self.dim,
            patch=self.patch,
            stride=self.stride,
            levels=self.levels,
            seed=self.seed,
            n_jobs=self.n_jobs,
        )

    def fit(self, X, y):
        X = _check_images(X)
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y have different sample counts")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        enc = self._encoder().fit(X)
        self.banks_ = enc.banks_
        words = enc.transform(X)
        self.prototypes_, self.mistakes_per_epoch_ = learning.train_prototypes(
            words,
            y_idx,
            num_classes=len(self.classes_),
            dim=self.dim,
            lr=self.lr,
            epochs=self.epochs,
            shuffle_seed=self.shuffle_seed,
        )
        return self

    def _transform(self, X) -> np.ndarray:
        check_is_fitted(self, "prototypes_")
        enc = self._encoder()
        enc.banks_ = self.banks_
        return enc.transform(X)

    def decision_function(self, X) -> np.ndarray:
        """Normalized similarity scores in [-1, 1], shape (n, n_classes)."""
        raw = scoring.raw_scores_batch(
            self._transform(X), self.prototypes_.require_packed(), self.dim
        )
        return scoring.normalize_scores(raw, self.dim)

    def predict(self, X) -> np.ndarray:
        raw = scoring.raw_scores_batch(
            self._transform(X), self.prototypes_.require_packed(), self.dim
        )
        return self.classes_[scoring.predict_from_raw(raw)]

    def save(self, path) -> None:
        """Persist to the binary model format.

        The file stores class count only, so labels load back as 0..C-1;
        fit with labels already in that form if you plan to round-trip.
        """
        check_is_fitted(self, "prototypes_")
        h_pad, w_pad = self.banks_.grid
        params = ModelParams(
            dim=self.dim,
            levels=self.levels,
            h_pad=h_pad,
            w_pad=w_pad,
            patch=self.patch,
            stride=self.stride,
            num_classes=len(self.classes_),
            bank_seed=self.seed,
        )
        save_model(path, params, self.prototypes_)

    @classmethod
    def load(cls, path) -> "HDCImageClassifier":
        """Rebuild a fitted classifier from a model file."""
        params, protos = load_model(path)
        clf = cls(
            dim=params.dim,
            patch=params.patch,
            stride=params.stride,
            levels=params.levels,
            seed=params.bank_seed,
        )
        clf.classes_ = np.arange(params.num_classes)
        clf.prototypes_ = protos
        clf.banks_ = generate_banks(
            params.dim, (params.h_pad, params.w_pad), params.levels, params.bank_seed
        )
        clf.mistakes_per_epoch_ = []
        return clf
