"""petident: dog identification from unconstrained images.

Detect dogs, cut three square overlapping windows from each detection,
classify every window against an enrolled identity registry, and fuse the
window predictions by majority vote with a strongest-activation fallback.
"""

from .augmentation import AugmentationSpec, LabeledWindow, augment_window, expand_dataset
from .config import PipelineConfig
from .dataset import (
    DatasetManifest,
    FoldAssignment,
    LabeledImage,
    ValidationReport,
    build_manifest,
    load_manifest,
    make_folds,
    save_manifest,
    validate_manifest,
)
from .detection import (
    BoundingBox,
    Detection,
    DetectorBackend,
    OnnxDetectorBackend,
    ScriptedDetectorBackend,
    detect,
    filter_dogs,
    select_primary,
)
from .errors import (
    BackendError,
    ConfigError,
    FixtureError,
    ManifestError,
    PetIdentError,
    StageError,
)
from .evaluation import EvaluationReport, accuracy, evaluate, read_report, write_report
from .fixtures import FixtureSet, generate_fixture_set
from .identification import (
    IdentityPrediction,
    NoIdentification,
    identify,
    identify_all,
    vote,
)
from .images import LoadedImage, load_image, save_image
from .inference import (
    ClassifierBackend,
    MockClassifierBackend,
    OnnxClassifierBackend,
    ScoreVector,
    classify,
    classify_batch,
)
from .windowing import Window, extract_windows, resize_crop, window_regions

__version__ = "0.1.0"

__all__ = [
    "AugmentationSpec",
    "BackendError",
    "BoundingBox",
    "ClassifierBackend",
    "ConfigError",
    "DatasetManifest",
    "Detection",
    "DetectorBackend",
    "EvaluationReport",
    "FixtureError",
    "FixtureSet",
    "FoldAssignment",
    "IdentityPrediction",
    "LabeledImage",
    "LabeledWindow",
    "LoadedImage",
    "ManifestError",
    "MockClassifierBackend",
    "NoIdentification",
    "OnnxClassifierBackend",
    "OnnxDetectorBackend",
    "PetIdentError",
    "PipelineConfig",
    "ScoreVector",
    "ScriptedDetectorBackend",
    "StageError",
    "ValidationReport",
    "Window",
    "accuracy",
    "augment_window",
    "build_manifest",
    "classify",
    "classify_batch",
    "detect",
    "evaluate",
    "expand_dataset",
    "extract_windows",
    "filter_dogs",
    "generate_fixture_set",
    "identify",
    "identify_all",
    "load_image",
    "load_manifest",
    "make_folds",
    "read_report",
    "resize_crop",
    "save_image",
    "save_manifest",
    "select_primary",
    "validate_manifest",
    "vote",
    "window_regions",
    "write_report",
]
