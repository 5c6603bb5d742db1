from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def write_toy_windows(
    out_dir: Path,
    num_identities: int = 4,
    per_identity: int = 5,
    side: int = 128,
    seed: int = 0,
) -> Path:
    """Synthetic pre-extracted windows with per-identity color and stripe
    signatures; returns the manifest path (runtime CLI manifest format)."""
    rng = np.random.default_rng(seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = ["image_path,identity_id"]
    for ident in range(num_identities):
        base = np.array([60 + ident * 45, 200 - ident * 40, 80 + ident * 30], dtype=np.float64)
        for i in range(per_identity):
            ys, xs = np.mgrid[0:side, 0:side]
            stripe = ((xs * (ident + 1) + ys * (num_identities - ident)) // 13) % 2
            img = base[None, None, :] + stripe[..., None] * 40 + rng.normal(0, 25, (side, side, 3))
            img = np.clip(img, 0, 255).astype(np.uint8)
            name = f"id{ident}_{i}.png"
            Image.fromarray(img).save(out_dir / name)
            rows.append(f"{name},dog{ident:02d}")
    manifest = out_dir / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest


@pytest.fixture(scope="session")
def toy_manifest(tmp_path_factory) -> Path:
    return write_toy_windows(tmp_path_factory.mktemp("toy_windows"))


@pytest.fixture(scope="session")
def quick_trained(toy_manifest):
    """A briefly trained compact model shared by unit tests (not the full
    documented schedule; acceptance runs that itself)."""
    from petident_trainer import TOY_RECIPE, build_model, finetune
    from dataclasses import replace

    model = build_model(4, base_architecture="compact")
    recipe = replace(TOY_RECIPE, epochs=2)
    history = finetune(model, toy_manifest, recipe)
    return model, history
