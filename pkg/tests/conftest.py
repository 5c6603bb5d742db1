from __future__ import annotations

import numpy as np
import pytest

from petident import generate_fixture_set
from petident.detection import BoundingBox
from petident.images import LoadedImage
from petident.windowing import Window


@pytest.fixture(scope="session")
def paper_scale_fixture(tmp_path_factory):
    """16 identities x 5 images, perfectly scripted (the dataset shape from
    the acceptance suite)."""
    out = tmp_path_factory.mktemp("fixture_16x5")
    return generate_fixture_set(16, 5, seed=42, out_dir=out)


@pytest.fixture(scope="session")
def partial_accuracy_fixture(tmp_path_factory):
    """16x5 set scripted to vote the true label on 75% of images."""
    out = tmp_path_factory.mktemp("fixture_16x5_p75")
    return generate_fixture_set(16, 5, seed=42, out_dir=out, accuracy_fraction=0.75)


@pytest.fixture(scope="session")
def small_fixture(tmp_path_factory):
    """4 identities x 5 images; cheap enough for per-module pipeline tests."""
    out = tmp_path_factory.mktemp("fixture_4x5")
    return generate_fixture_set(4, 5, seed=7, out_dir=out)


def make_test_image(width=200, height=150, seed=0, ref=None) -> LoadedImage:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, (height, width, 3), dtype=np.uint8)
    return LoadedImage(pixels=pixels, ref=ref)


def make_window(side=32, seed=0) -> Window:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, (side, side, 3), dtype=np.uint8)
    return Window(region=BoundingBox(0, 0, side, side), pixels=pixels)
