"""Window-manifest dataset: the CSV + image-file format the runtime CLI emits."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset

MANIFEST_HEADER = ("image_path", "identity_id")


def read_window_manifest(path: str | Path) -> tuple[list[tuple[str, str]], tuple[str, ...]]:
    """Rows and the identity registry in first-appearance order (the same
    class-index rule the runtime uses)."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"manifest not found: {p}")
    rows: list[tuple[str, str]] = []
    order: list[str] = []
    with p.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header[:2]) != MANIFEST_HEADER:
            raise ValueError(f"manifest {p} must start with columns {MANIFEST_HEADER}")
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            image_path, identity = row[0].strip(), row[1].strip()
            if not image_path or not identity:
                raise ValueError(f"manifest {p} has an empty field in row {row}")
            rows.append((image_path, identity))
            if identity not in order:
                order.append(identity)
    if not rows:
        raise ValueError(f"manifest {p} is empty")
    return rows, tuple(order)


class WindowDataset(Dataset):
    """Pre-extracted window images with identity labels.

    Pixels are scaled to [-1, 1] (the runtime's "inception" convention, which
    the export sidecar declares) and returned as CHW float32 tensors.
    """

    def __init__(self, manifest_path: str | Path, input_side: int):
        self.root = Path(manifest_path).parent
        self.rows, self.identities = read_window_manifest(manifest_path)
        self.class_index = {ident: i for i, ident in enumerate(self.identities)}
        self.input_side = input_side

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, idx: int):
        image_path, identity = self.rows[idx]
        p = Path(image_path)
        if not p.is_absolute():
            p = self.root / p
        with Image.open(p) as im:
            im = im.convert("RGB")
            if im.size != (self.input_side, self.input_side):
                im = im.resize((self.input_side, self.input_side), Image.BILINEAR)
            pixels = np.asarray(im, dtype=np.float32)
        tensor = torch.from_numpy(pixels / 127.5 - 1.0).permute(2, 0, 1)
        return tensor, self.class_index[identity]
