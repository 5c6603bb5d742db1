"""Deterministic flip / shift / shear / zoom augmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .dataset import DatasetManifest, build_manifest
from .errors import PetIdentError
from .images import load_image, save_image
from .windowing import Window

DEFAULT_EXPANSION_FACTOR = 16

_BORDER_MODES = {
    "nearest": cv2.BORDER_REPLICATE,
    "reflect": cv2.BORDER_REFLECT,
}


@dataclass(frozen=True)
class AugmentationSpec:
    """Transform ranges plus the seed that makes every draw reproducible.

    ``shift_fraction`` bounds per-axis translation as a fraction of the buffer
    side, ``shear_degrees`` bounds the shear angle, and ``zoom_range`` bounds
    the zoom factor (above 1 crops centrally, below 1 shrinks and fills
    borders per ``fill_mode``).
    """

    flip_probability: float = 0.5
    shift_fraction: float = 0.1
    shear_degrees: float = 10.0
    zoom_range: tuple[float, float] = (0.9, 1.1)
    fill_mode: str = "nearest"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.flip_probability <= 1.0:
            raise PetIdentError(f"flip_probability must be in [0,1], got {self.flip_probability}")
        if self.shift_fraction < 0:
            raise PetIdentError(f"shift_fraction must be non-negative, got {self.shift_fraction}")
        if self.shear_degrees < 0:
            raise PetIdentError(f"shear_degrees must be non-negative, got {self.shear_degrees}")
        lo, hi = self.zoom_range
        if not 0 < lo <= hi:
            raise PetIdentError(f"zoom_range must satisfy 0 < lo <= hi, got {self.zoom_range}")
        if self.fill_mode not in _BORDER_MODES:
            raise PetIdentError(f"fill_mode must be one of {sorted(_BORDER_MODES)}, got {self.fill_mode!r}")
        if not 0 <= self.seed < 2**64:
            raise PetIdentError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "flip_probability": self.flip_probability,
            "shift_fraction": self.shift_fraction,
            "shear_degrees": self.shear_degrees,
            "zoom_range": list(self.zoom_range),
            "fill_mode": self.fill_mode,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> AugmentationSpec:
        known = {"flip_probability", "shift_fraction", "shear_degrees", "zoom_range", "fill_mode", "seed"}
        unknown = set(data) - known
        if unknown:
            raise PetIdentError(f"unknown augmentation keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "zoom_range" in kwargs:
            kwargs["zoom_range"] = tuple(kwargs["zoom_range"])
        return cls(**kwargs)


IDENTITY_SPEC = AugmentationSpec(
    flip_probability=0.0, shift_fraction=0.0, shear_degrees=0.0, zoom_range=(1.0, 1.0)
)


def _draws(spec: AugmentationSpec, draw_index: int):
    """Fixed-order parameter draws for one augmentation: flip, dx, dy, shear, zoom."""
    if draw_index < 0:
        raise PetIdentError(f"draw_index must be non-negative, got {draw_index}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, draw_index])))
    flip = rng.random() < spec.flip_probability
    dx = rng.uniform(-spec.shift_fraction, spec.shift_fraction)
    dy = rng.uniform(-spec.shift_fraction, spec.shift_fraction)
    shear = rng.uniform(-spec.shear_degrees, spec.shear_degrees)
    zoom = rng.uniform(spec.zoom_range[0], spec.zoom_range[1])
    return flip, dx, dy, shear, zoom


def _inverse_matrix(width: int, height: int, flip: bool, dx: float, dy: float, shear_deg: float, zoom: float):
    """Destination-to-source affine map for flip -> shift -> shear -> zoom."""
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    eye = np.eye(3)

    flip_inv = np.array([[-1.0, 0.0, width - 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) if flip else eye
    shift_inv = np.array([[1.0, 0.0, -dx], [0.0, 1.0, -dy], [0.0, 0.0, 1.0]])
    tan_shear = math.tan(math.radians(shear_deg))
    shear_inv = np.array([[1.0, -tan_shear, tan_shear * cy], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    zoom_inv = np.array(
        [[1.0 / zoom, 0.0, cx - cx / zoom], [0.0, 1.0 / zoom, cy - cy / zoom], [0.0, 0.0, 1.0]]
    )
    # Applied to an output point: undo zoom, then shear, then shift, then flip.
    return flip_inv @ shift_inv @ shear_inv @ zoom_inv


def augment_buffer(pixels: np.ndarray, spec: AugmentationSpec, draw_index: int) -> np.ndarray:
    """Augmented copy of an RGB buffer; output dimensions equal input dimensions."""
    height, width = pixels.shape[:2]
    flip, dx_frac, dy_frac, shear, zoom = _draws(spec, draw_index)
    matrix = _inverse_matrix(width, height, flip, dx_frac * width, dy_frac * height, shear, zoom)
    return cv2.warpAffine(
        pixels,
        matrix[:2],
        (width, height),
        flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP,
        borderMode=_BORDER_MODES[spec.fill_mode],
    )


def augment_window(window: Window, spec: AugmentationSpec, draw_index: int) -> Window:
    """Augmented copy of a window; the source region is preserved."""
    return Window(region=window.region, pixels=augment_buffer(window.pixels, spec, draw_index))


@dataclass(frozen=True)
class LabeledWindow:
    window: Window
    identity: str


def expand_dataset(
    items: list[LabeledWindow],
    spec: AugmentationSpec,
    factor: int = DEFAULT_EXPANSION_FACTOR,
) -> list[LabeledWindow]:
    """Each input window followed by factor-1 augmented variants with the same
    label; output size is exactly factor times input size."""
    if factor < 1:
        raise PetIdentError(f"expansion factor must be at least 1, got {factor}")
    out: list[LabeledWindow] = []
    for i, item in enumerate(items):
        out.append(item)
        for variant in range(1, factor):
            draw_index = i * (factor - 1) + (variant - 1)
            out.append(
                LabeledWindow(window=augment_window(item.window, spec, draw_index), identity=item.identity)
            )
    return out


def expand_files(
    manifest: DatasetManifest,
    spec: AugmentationSpec,
    factor: int,
    out_dir: str | Path,
) -> DatasetManifest:
    """Augment every manifest image into ``out_dir`` and return the expanded
    manifest (also written as ``out_dir/manifest.csv``).

    Files are named ``<origstem>_aug<k>.png`` with k=0 the unmodified copy;
    clashing stems get a disambiguating numeric suffix.
    """
    if factor < 1:
        raise PetIdentError(f"expansion factor must be at least 1, got {factor}")
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    used_stems: set[str] = set()
    rows: list[tuple[str, str]] = []
    for i, entry in enumerate(manifest.entries):
        image = load_image(manifest.resolve_path(entry), ref=entry.image_path)
        stem = Path(entry.image_path).stem
        if stem in used_stems:
            n = 2
            while f"{stem}_{n}" in used_stems:
                n += 1
            stem = f"{stem}_{n}"
        used_stems.add(stem)
        for k in range(factor):
            if k == 0:
                pixels = image.pixels
            else:
                pixels = augment_buffer(image.pixels, spec, i * (factor - 1) + (k - 1))
            name = f"{stem}_aug{k}.png"
            save_image(pixels, out_path / name)
            rows.append((name, entry.identity))
    expanded = build_manifest(rows, root=out_path)
    from .dataset import save_manifest

    save_manifest(expanded, out_path / "manifest.csv")
    return expanded
