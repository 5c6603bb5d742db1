"""Image loading and the in-memory image type used by every stage."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import PetIdentError


@dataclass(frozen=True)
class LoadedImage:
    """A decoded RGB raster plus where it came from.

    ``ref`` is the image's logical reference string (usually the path as it
    appeared in a manifest or on the command line); scripted backends key
    their fixture tables on it.
    """

    pixels: np.ndarray  # H x W x 3, uint8, RGB
    path: Path | None = None
    ref: str | None = field(default=None)

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise PetIdentError(f"expected HxWx3 pixel buffer, got shape {self.pixels.shape}")
        if self.pixels.dtype != np.uint8:
            raise PetIdentError(f"expected uint8 pixels, got {self.pixels.dtype}")
        if self.pixels.shape[0] == 0 or self.pixels.shape[1] == 0:
            raise PetIdentError("empty image")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def load_image(path: str | Path, ref: str | None = None) -> LoadedImage:
    """Decode an image file to RGB uint8.

    ``ref`` overrides the logical reference stored on the result; it defaults
    to the path string exactly as given.
    """
    p = Path(path)
    if not p.is_file():
        raise PetIdentError(f"image not found: {p}")
    try:
        with Image.open(p) as im:
            pixels = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except PetIdentError:
        raise
    except Exception as exc:
        raise PetIdentError(f"cannot decode image {p}: {exc}") from exc
    return LoadedImage(pixels=pixels, path=p, ref=ref if ref is not None else str(path))


def save_image(pixels: np.ndarray, path: str | Path) -> None:
    """Write an RGB uint8 buffer as an image file (format from the suffix)."""
    Image.fromarray(pixels, mode="RGB").save(Path(path))


def pixel_sha256(pixels: np.ndarray) -> str:
    """Stable fingerprint of a pixel buffer: SHA-256 over shape and bytes."""
    h = hashlib.sha256()
    h.update(str(pixels.shape).encode("ascii"))
    h.update(np.ascontiguousarray(pixels).tobytes())
    return h.hexdigest()
