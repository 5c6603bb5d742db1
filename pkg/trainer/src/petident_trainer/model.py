"""Classifier architectures: a pretrain-style Inception v3 base and a compact
CPU-friendly base, both under the same classification head."""

from __future__ import annotations

import torch
from torch import nn

HIDDEN_UNITS = 1024
DEFAULT_DROPOUT = 0.5

# (kind, args): conv rows are (in_ch, out_ch, kernel, stride, pad) and expand
# to Conv2d(bias=False) + BatchNorm2d + ReLU; maxpool rows are (kernel, stride).
COMPACT_SPEC = (
    ("conv", (3, 16, 3, 2, 1)),
    ("conv", (16, 32, 3, 2, 1)),
    ("maxpool", (2, 2)),
    ("conv", (32, 64, 3, 1, 1)),
    ("maxpool", (2, 2)),
)
COMPACT_FEATURE_CHANNELS = 64


class CompactFeatures(nn.Module):
    """Small convolutional trunk; every layer is expressible in the ONNX
    operator subset the runtime executes."""

    def __init__(self):
        super().__init__()
        layers: list[nn.Module] = []
        for kind, args in COMPACT_SPEC:
            if kind == "conv":
                in_ch, out_ch, kernel, stride, pad = args
                layers += [
                    nn.Conv2d(in_ch, out_ch, kernel, stride=stride, padding=pad, bias=False),
                    nn.BatchNorm2d(out_ch),
                    nn.ReLU(inplace=True),
                ]
            else:
                kernel, stride = args
                layers.append(nn.MaxPool2d(kernel, stride))
        self.layers = nn.Sequential(*layers)

    def forward(self, x):
        return self.layers(x)


class IdentityClassifier(nn.Module):
    """Feature trunk plus the fixed head: global average pooling, a
    1024-unit fully connected layer, dropout, and a softmax over the K
    enrolled identities. ``forward`` returns probabilities; training uses
    ``head_logits``."""

    def __init__(self, features: nn.Module, feature_channels: int, num_classes: int,
                 dropout: float = DEFAULT_DROPOUT, base_architecture: str = "compact"):
        super().__init__()
        if num_classes < 2:
            raise ValueError(f"need at least 2 identities, got {num_classes}")
        self.features = features
        self.gap = nn.AdaptiveAvgPool2d(1)
        self.fc_hidden = nn.Linear(feature_channels, HIDDEN_UNITS)
        self.dropout = nn.Dropout(dropout)
        self.fc_out = nn.Linear(HIDDEN_UNITS, num_classes)
        self.num_classes = num_classes
        self.base_architecture = base_architecture

    def head_logits(self, x):
        feats = self.features(x)
        if feats.ndim == 4:
            feats = torch.flatten(self.gap(feats), 1)
        hidden = torch.relu(self.fc_hidden(feats))
        return self.fc_out(self.dropout(hidden))

    def forward(self, x):
        return torch.softmax(self.head_logits(x), dim=1)


def build_model(
    num_classes: int,
    base_architecture: str = "inception_v3",
    dropout: float = DEFAULT_DROPOUT,
    weights_path: str | None = None,
) -> IdentityClassifier:
    """Assemble the classifier for K identities.

    ``inception_v3`` is the paper-scale base (random init unless a local
    weights file is given; pretrained downloads are unavailable here);
    ``compact`` is the toy-scale base and the only one the ONNX exporter
    supports.
    """
    if num_classes < 2:
        raise ValueError(f"need at least 2 identities, got {num_classes}")
    if base_architecture == "compact":
        features: nn.Module = CompactFeatures()
        channels = COMPACT_FEATURE_CHANNELS
    elif base_architecture == "inception_v3":
        from torchvision.models import inception_v3

        backbone = inception_v3(weights=None, aux_logits=False, init_weights=True)
        if weights_path:
            state = torch.load(weights_path, map_location="cpu", weights_only=True)
            backbone.load_state_dict(state, strict=False)
        backbone.fc = nn.Identity()  # expose the 2048-wide pooled features
        features = backbone
        channels = 2048
    else:
        raise ValueError(f"unknown base architecture {base_architecture!r}")
    return IdentityClassifier(
        features, channels, num_classes, dropout=dropout, base_architecture=base_architecture
    )


def freeze_features(model: IdentityClassifier, frozen: bool = True) -> None:
    """Freeze-depth knob: stop (or resume) gradient flow through the trunk."""
    for param in model.features.parameters():
        param.requires_grad_(not frozen)
