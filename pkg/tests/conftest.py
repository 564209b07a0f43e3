"""Shared fixtures.

Real-dataset tests look for IDX files under $HDC_DATA_DIR (default ./data),
expecting mnist/ and fashion/ subdirectories with the usual file names
(train-images-idx3-ubyte, t10k-labels-idx1-ubyte, ..., optionally .gz).
Tests that need them skip with instructions when the files are absent.
Heavy full-scale runs additionally require HDC_FULL=1.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from patchhd import datasets, encoding
from patchhd.hv import generate_banks
from patchhd.selftest import make_synthetic_images

_IDX_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def data_root() -> Path:
    return Path(os.environ.get("HDC_DATA_DIR", "data"))


def find_idx(subdir: str, key: str) -> Path | None:
    base = data_root() / subdir / _IDX_NAMES[key]
    for candidate in (base, base.with_name(base.name + ".gz")):
        if candidate.is_file():
            return candidate
    return None


def require_dataset(subdir: str) -> dict[str, Path]:
    """Return the four IDX paths for a dataset or skip with instructions."""
    paths = {key: find_idx(subdir, key) for key in _IDX_NAMES}
    missing = [key for key, p in paths.items() if p is None]
    if missing:
        pytest.skip(
            f"{subdir} IDX files not found under {data_root() / subdir} "
            f"(missing {missing}); set HDC_DATA_DIR to a directory holding "
            f"{subdir}/{{train,t10k}}-{{images-idx3,labels-idx1}}-ubyte[.gz]"
        )
    return paths


def require_full_flag() -> None:
    if os.environ.get("HDC_FULL") != "1":
        pytest.skip("full-scale run (minutes to hours); set HDC_FULL=1 to enable")


@pytest.fixture(scope="session")
def toy_data():
    """Separable 4-class 8x8 images plus their quantized form."""
    images, labels = make_synthetic_images(4, 10, grid=(8, 8), block=2, seed=42)
    lvl = encoding.quantize_image(images, levels=4)
    return images, lvl, labels


@pytest.fixture(scope="session")
def toy_banks():
    return generate_banks(512, (8, 8), 4, seed=7)


@pytest.fixture()
def idx_pair(tmp_path):
    """Write a small random IDX image/label pair; returns the two paths."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(3)))
    images = rng.integers(0, 256, size=(12, 8, 8)).astype(np.uint8)
    labels = rng.integers(0, 3, size=12).astype(np.uint8)
    img_path = tmp_path / "imgs-idx3-ubyte"
    lab_path = tmp_path / "labs-idx1-ubyte"
    datasets.write_idx_images(img_path, images)
    datasets.write_idx_labels(lab_path, labels)
    return img_path, lab_path, images, labels
