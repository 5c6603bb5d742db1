"""Square window extraction along a box's longer dimension."""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .detection import BoundingBox
from .errors import PetIdentError
from .images import LoadedImage

DEFAULT_INPUT_SIDE = 299
WINDOWS_PER_BOX = 3


@dataclass(frozen=True)
class Window:
    """A square crop region in source-image coordinates plus its resized pixels."""

    region: BoundingBox
    pixels: np.ndarray  # input_side x input_side x 3, uint8

    def __post_init__(self):
        if self.region.w != self.region.h:
            raise PetIdentError(f"window region must be square, got {self.region.w}x{self.region.h}")
        side = self.pixels.shape[0]
        if self.pixels.shape != (side, side, 3):
            raise PetIdentError(f"window buffer must be side x side x 3, got {self.pixels.shape}")

    @property
    def input_side(self) -> int:
        return self.pixels.shape[0]


def window_regions(box: BoundingBox) -> tuple[BoundingBox, BoundingBox, BoundingBox]:
    """The three square regions tiling ``box`` along its longer dimension.

    Side S = min(w, h); offsets along the longer dimension are 0,
    floor((L - S) / 2), and L - S, so the box's ends are always covered and
    consecutive windows overlap whenever L <= 3S - 2 (at L = 3S - 1 integer
    placement can only make one pair touch; beyond 3S gaps open up).
    """
    side = min(box.w, box.h)
    longer = max(box.w, box.h)
    offsets = (0, (longer - side) // 2, longer - side)
    if box.w >= box.h:
        return tuple(BoundingBox(x=box.x + off, y=box.y, w=side, h=side) for off in offsets)
    return tuple(BoundingBox(x=box.x, y=box.y + off, w=side, h=side) for off in offsets)


def resize_crop(crop: np.ndarray, side: int) -> np.ndarray:
    """Bilinear resize of an RGB crop to side x side; identity sizes copy bytes."""
    if side < 1:
        raise PetIdentError(f"resize side must be positive, got {side}")
    if crop.size == 0:
        raise PetIdentError("cannot resize an empty crop")
    if crop.shape[0] == side and crop.shape[1] == side:
        return crop.copy()
    return cv2.resize(crop, (side, side), interpolation=cv2.INTER_LINEAR)


def extract_windows(
    image: LoadedImage,
    box: BoundingBox,
    input_side: int = DEFAULT_INPUT_SIDE,
) -> tuple[Window, Window, Window]:
    """Crop the three square windows for ``box`` and resize each to the
    classifier input size. Output order: start, middle, end."""
    clamped = box.clamped(image.width, image.height)
    if clamped is None or clamped != box:
        raise PetIdentError(f"box {box} does not fit image {image.width}x{image.height}")
    windows = []
    for region in window_regions(box):
        crop = image.pixels[region.y : region.bottom, region.x : region.right]
        windows.append(Window(region=region, pixels=resize_crop(crop, input_side)))
    return tuple(windows)
