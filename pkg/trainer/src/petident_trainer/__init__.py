"""Training component for the petident runtime: builds the classifier,
fine-tunes it on window manifests, and exports ONNX + sidecar model files."""

from .data import WindowDataset, read_window_manifest
from .export import export_model, forward_probabilities
from .model import IdentityClassifier, build_model, freeze_features
from .train import TOY_RECIPE, TrainingHistory, TrainingRecipe, finetune, run_stages

__version__ = "0.1.0"

__all__ = [
    "IdentityClassifier",
    "TOY_RECIPE",
    "TrainingHistory",
    "TrainingRecipe",
    "WindowDataset",
    "build_model",
    "export_model",
    "finetune",
    "forward_probabilities",
    "freeze_features",
    "read_window_manifest",
    "run_stages",
]
