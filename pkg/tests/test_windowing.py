from __future__ import annotations

import numpy as np
import pytest

from conftest import make_test_image
from oracles import CHECKERBOARD_2X2, CHECKERBOARD_4X4_EXPECTED, check_window_geometry, reference_bilinear
from petident import BoundingBox, extract_windows, resize_crop, window_regions
from petident.errors import PetIdentError


class TestWindowRegions:
    def test_horizontal_3s_box(self):
        regions = window_regions(BoundingBox(0, 0, 300, 100))
        assert [r.x for r in regions] == [0, 100, 200]
        assert all(r.w == r.h == 100 and r.y == 0 for r in regions)

    def test_square_box_degenerates(self):
        regions = window_regions(BoundingBox(5, 9, 100, 100))
        assert regions[0] == regions[1] == regions[2]
        assert regions[0] == BoundingBox(5, 9, 100, 100)

    def test_vertical_long_axis(self):
        regions = window_regions(BoundingBox(10, 20, 100, 250))
        assert [r.y for r in regions] == [20, 95, 170]
        assert all(r.x == 10 and r.w == r.h == 100 for r in regions)

    def test_geometry_invariants_random_boxes(self):
        rng = np.random.default_rng(123)
        for _ in range(300):
            w = int(rng.integers(1, 400))
            h = int(rng.integers(1, 400))
            box = BoundingBox(int(rng.integers(0, 50)), int(rng.integers(0, 50)), w, h)
            assert check_window_geometry(box, window_regions(box)) == []

    def test_aspect_over_three_leaves_gaps_but_covers_ends(self):
        box = BoundingBox(0, 0, 500, 100)
        regions = window_regions(box)
        assert regions[0].x == 0 and regions[2].right == 500
        assert regions[1].x - regions[0].right > 0  # documented gap

    def test_integer_boundary_at_l_equals_3s_minus_1(self):
        # Gaps sum to L - S = 2S - 1, so one pair must touch exactly; the
        # union still covers the box with no positive gap anywhere.
        regions = window_regions(BoundingBox(0, 0, 29, 10))
        assert [r.x for r in regions] == [0, 9, 19]
        assert regions[1].x < regions[0].right  # first pair overlaps
        assert regions[2].x == regions[1].right  # second pair touches
        assert check_window_geometry(BoundingBox(0, 0, 29, 10), regions) == []


class TestResizeCrop:
    def test_identity_resize_is_byte_identical(self):
        rng = np.random.default_rng(0)
        crop = rng.integers(0, 256, (100, 100, 3), dtype=np.uint8)
        out = resize_crop(crop, 100)
        assert np.array_equal(out, crop)
        assert out is not crop

    def test_uniform_color_stays_uniform(self):
        crop = np.full((50, 50, 3), 173, dtype=np.uint8)
        out = resize_crop(crop, 299)
        assert out.shape == (299, 299, 3)
        assert np.all(out == 173)

    def test_checkerboard_2x2_to_4x4_matches_hand_computation(self):
        crop = np.stack([CHECKERBOARD_2X2] * 3, axis=-1)
        out = resize_crop(crop, 4)
        for channel in range(3):
            assert np.array_equal(out[:, :, channel], CHECKERBOARD_4X4_EXPECTED)
        # corners equal source corners exactly
        assert out[0, 0, 0] == 255 and out[0, 3, 0] == 0
        assert out[3, 0, 0] == 0 and out[3, 3, 0] == 255

    def test_agrees_with_reference_bilinear(self):
        rng = np.random.default_rng(77)
        for _ in range(5):
            h, w = int(rng.integers(2, 40)), int(rng.integers(2, 40))
            side = int(rng.integers(2, 64))
            crop = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
            got = resize_crop(crop, side).astype(np.float64)
            want = reference_bilinear(crop.astype(np.float64), side)
            assert np.abs(got - want).max() <= 1.0

    def test_empty_crop_rejected(self):
        with pytest.raises(PetIdentError):
            resize_crop(np.zeros((0, 10, 3), dtype=np.uint8), 10)


class TestExtractWindows:
    def test_exactly_three_resized_windows(self):
        image = make_test_image(400, 200, seed=3)
        windows = extract_windows(image, BoundingBox(10, 20, 330, 120), input_side=64)
        assert len(windows) == 3
        for window in windows:
            assert window.pixels.shape == (64, 64, 3)
            assert window.region.w == window.region.h == 120

    def test_pixels_match_manual_crop(self):
        image = make_test_image(300, 150, seed=4)
        box = BoundingBox(0, 10, 240, 80)
        windows = extract_windows(image, box, input_side=50)
        for region, window in zip(window_regions(box), windows):
            crop = image.pixels[region.y : region.bottom, region.x : region.right]
            assert np.array_equal(window.pixels, resize_crop(crop, 50))

    def test_square_box_gives_identical_windows(self):
        image = make_test_image(200, 200, seed=5)
        windows = extract_windows(image, BoundingBox(40, 40, 100, 100), input_side=32)
        assert np.array_equal(windows[0].pixels, windows[1].pixels)
        assert np.array_equal(windows[1].pixels, windows[2].pixels)

    def test_box_outside_image_rejected(self):
        image = make_test_image(100, 100)
        with pytest.raises(PetIdentError):
            extract_windows(image, BoundingBox(50, 50, 100, 100))

    def test_default_input_side_is_299(self):
        image = make_test_image(350, 320, seed=6)
        windows = extract_windows(image, BoundingBox(0, 0, 300, 300))
        assert windows[0].pixels.shape == (299, 299, 3)
