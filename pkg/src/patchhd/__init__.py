"""Patch-based hyperdimensional image classification.

Encodes grayscale images into high-dimensional bipolar vectors by binding
pixel-position and intensity-level codebooks over image patches, learns one
prototype vector per class online, and classifies by packed-domain
similarity. A cycle-parametric simulator models a streaming hardware
implementation of the same pipeline, bit-exactly.
"""

from .accel import (
    AccelConfig,
    CycleBreakdown,
    SimReport,
    closed_form_cycles,
    simulate_image,
    sweep,
)
from .datasets import IdxFormatError, load_image_set, read_idx_images, read_idx_labels
from .encoding import (
    encode_image,
    encode_images,
    encode_patch,
    encode_pixel,
    patch_grid,
    quantize_image,
)
from .estimators import HDCImageClassifier, HDCImageEncoder
from .hv import BipolarHV, HvBanks, bind, binarize, bipolar_dot, generate_banks, permute
from .learning import ClassPrototypes, PrototypeStateError, train_prototypes
from .modelio import ModelFormatError, ModelParams, load_model, save_model
from .scoring import evaluate, evaluate_images, predict, score

__version__ = "0.1.0"

__all__ = [
    "AccelConfig",
    "BipolarHV",
    "ClassPrototypes",
    "CycleBreakdown",
    "HDCImageClassifier",
    "HDCImageEncoder",
    "HvBanks",
    "IdxFormatError",
    "ModelFormatError",
    "ModelParams",
    "PrototypeStateError",
    "SimReport",
    "binarize",
    "bind",
    "bipolar_dot",
    "closed_form_cycles",
    "encode_image",
    "encode_images",
    "encode_patch",
    "encode_pixel",
    "evaluate",
    "evaluate_images",
    "generate_banks",
    "load_image_set",
    "load_model",
    "patch_grid",
    "permute",
    "predict",
    "quantize_image",
    "read_idx_images",
    "read_idx_labels",
    "save_model",
    "score",
    "simulate_image",
    "sweep",
    "train_prototypes",
    "__version__",
]
