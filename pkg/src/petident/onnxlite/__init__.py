"""Self-contained ONNX support: a protobuf wire codec for the model schema
subset this package uses, and a NumPy executor for its operator vocabulary.

Files written here are standard ONNX protobuf and load in any ONNX runtime;
this package exists because the deployment environment provides none.
"""

from .model import Node, OnnxModel, TensorInfo, load_model, model_from_bytes, model_to_bytes, save_model
from .executor import GraphExecutor, SUPPORTED_OPS

__all__ = [
    "GraphExecutor",
    "Node",
    "OnnxModel",
    "SUPPORTED_OPS",
    "TensorInfo",
    "load_model",
    "model_from_bytes",
    "model_to_bytes",
    "save_model",
]
