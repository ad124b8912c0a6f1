"""
flow_rbm - Pixel motion between binary frames with a factored gated RBM.

This library provides synthetic frame-pair generation, CD-1 training of a
factored third-order RBM, max-flow field inference, analogy reconstruction,
global motion estimation and foreground segmentation.
"""

from importlib.metadata import PackageNotFoundError, version

from .config import DatasetConfig, TrainConfig, load_config_file
from .datagen import ImagePair, PairKind, Scene, TransformLabel, make_pairs, make_scene
from .errors import (
    EmptyEvidenceError,
    FlowRBMError,
    ImageFormatError,
    ModelFormatError,
    NoGlobalMotionError,
    TrainingDivergedError,
)
from .flow import FlowField, analogy_reconstruct, max_flow_field, render_flow
from .imagecore import Image, pgm_read, pgm_write
from .logging import logger
from .models import BaselineRBM, FactoredGRBM, HiddenState, load_model, save_model
from .motion import GlobalMotion, SegMask, classify_global_motion, segment_foreground
from .training import TrainReport, train

try:
    __version__ = version("flow-rbm")
except PackageNotFoundError:
    __version__ = "0.1.0"

__all__ = [
    "BaselineRBM",
    "DatasetConfig",
    "EmptyEvidenceError",
    "FactoredGRBM",
    "FlowField",
    "FlowRBMError",
    "GlobalMotion",
    "HiddenState",
    "Image",
    "ImageFormatError",
    "ImagePair",
    "ModelFormatError",
    "NoGlobalMotionError",
    "PairKind",
    "Scene",
    "SegMask",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "TransformLabel",
    "analogy_reconstruct",
    "classify_global_motion",
    "load_config_file",
    "load_model",
    "logger",
    "make_pairs",
    "make_scene",
    "max_flow_field",
    "pgm_read",
    "pgm_write",
    "render_flow",
    "save_model",
    "segment_foreground",
    "train",
]
