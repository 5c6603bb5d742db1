"""Export a trained classifier as ONNX plus the JSON metadata sidecar the
runtime's model-file backend requires."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from . import onnx_writer as ow
from .model import COMPACT_SPEC, IdentityClassifier

METADATA_SCHEMA = "petident-classifier/1"
SCALING = "inception"  # matches WindowDataset's v/127.5 - 1 preprocessing


def _compact_feature_nodes(model: IdentityClassifier):
    """Walk the compact trunk spec and its weights into ONNX nodes."""
    nodes: list[bytes] = []
    initializers: list[bytes] = []
    layers = list(model.features.layers)
    cursor = 0
    value = "image"
    index = 0
    for kind, args in COMPACT_SPEC:
        if kind == "conv":
            conv, bn = layers[cursor], layers[cursor + 1]
            cursor += 3  # conv, bn, relu
            _, _, kernel, stride, pad = args
            conv_out = f"conv{index}"
            nodes.append(
                ow.node(
                    "Conv",
                    (value, f"w{index}"),
                    (conv_out,),
                    strides=[stride, stride],
                    pads=[pad, pad, pad, pad],
                    kernel_shape=[kernel, kernel],
                )
            )
            initializers.append(ow.tensor(f"w{index}", conv.weight.detach().numpy()))
            bn_out = f"bn{index}"
            nodes.append(
                ow.node(
                    "BatchNormalization",
                    (conv_out, f"g{index}", f"b{index}", f"m{index}", f"v{index}"),
                    (bn_out,),
                    epsilon=float(bn.eps),
                )
            )
            initializers += [
                ow.tensor(f"g{index}", bn.weight.detach().numpy()),
                ow.tensor(f"b{index}", bn.bias.detach().numpy()),
                ow.tensor(f"m{index}", bn.running_mean.numpy()),
                ow.tensor(f"v{index}", bn.running_var.numpy()),
            ]
            relu_out = f"relu{index}"
            nodes.append(ow.node("Relu", (bn_out,), (relu_out,)))
            value = relu_out
        else:
            kernel, stride = args
            cursor += 1
            pool_out = f"pool{index}"
            nodes.append(
                ow.node(
                    "MaxPool",
                    (value,),
                    (pool_out,),
                    kernel_shape=[kernel, kernel],
                    strides=[stride, stride],
                )
            )
            value = pool_out
        index += 1
    return nodes, initializers, value


def export_model(
    model: IdentityClassifier,
    export_path: str | Path,
    identities,
    input_side: int,
) -> Path:
    """Write ``<export_path>`` (ONNX) and its ``.json`` sidecar.

    Dropout is inference-elided. Only the compact base has an ONNX mapping;
    exporting the inception base needs real onnx tooling, which this
    environment lacks.
    """
    identities = tuple(identities)
    if model.base_architecture != "compact":
        raise ValueError(
            f"ONNX export supports the compact base only, not {model.base_architecture!r}"
        )
    if len(identities) != model.fc_out.out_features:
        raise ValueError(
            f"{len(identities)} identities for a model with {model.fc_out.out_features} outputs"
        )

    model.eval()
    nodes, initializers, value = _compact_feature_nodes(model)
    nodes += [
        ow.node("GlobalAveragePool", (value,), ("gap",)),
        ow.node("Flatten", ("gap",), ("flat",), axis=1),
        ow.node("Gemm", ("flat", "fc1_w", "fc1_b"), ("hidden",), transB=1),
        ow.node("Relu", ("hidden",), ("hidden_relu",)),
        ow.node("Gemm", ("hidden_relu", "fc2_w", "fc2_b"), ("logits",), transB=1),
        ow.node("Softmax", ("logits",), ("probabilities",), axis=-1),
    ]
    initializers += [
        ow.tensor("fc1_w", model.fc_hidden.weight.detach().numpy()),
        ow.tensor("fc1_b", model.fc_hidden.bias.detach().numpy()),
        ow.tensor("fc2_w", model.fc_out.weight.detach().numpy()),
        ow.tensor("fc2_b", model.fc_out.bias.detach().numpy()),
    ]

    payload = ow.model(
        nodes=nodes,
        initializers=initializers,
        inputs=[ow.value_info("image", (1, 3, input_side, input_side))],
        outputs=[ow.value_info("probabilities", (1, len(identities)))],
    )
    path = Path(export_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)

    sidecar = path.with_suffix(".json")
    sidecar.write_text(
        json.dumps(
            {
                "schema": METADATA_SCHEMA,
                "input_layout": "nchw",
                "input_side": input_side,
                "scaling": SCALING,
                "identities": list(identities),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return path


def forward_probabilities(model: IdentityClassifier, pixels: np.ndarray) -> np.ndarray:
    """Trainer-side inference on one uint8 RGB window (the reference half of
    the cross-runtime agreement check)."""
    model.eval()
    x = torch.from_numpy(pixels.astype(np.float32) / 127.5 - 1.0).permute(2, 0, 1).unsqueeze(0)
    with torch.no_grad():
        return model(x).numpy()[0]
