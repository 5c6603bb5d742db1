"""Synthetic test assets: drawn images with known dog regions, scripted
detector and classifier tables, and a manifest tying them together."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DatasetManifest, build_manifest, save_manifest
from .detection import BoundingBox, Detection, ScriptedDetectorBackend, write_detection_table
from .errors import FixtureError
from .images import LoadedImage, pixel_sha256, save_image
from .inference import MockClassifierBackend, write_score_table
from .windowing import extract_windows

DEFAULT_INPUT_SIDE = 299

# Box aspect ratios cycled across generated images; includes the square case
# and one ratio above 3 (windows then leave gaps, which the pipeline allows).
_ASPECTS = (1.0, 1.6, 2.4, 0.7, 3.5)


@dataclass(frozen=True)
class FixtureSet:
    """Generated assets plus in-memory scripted tables."""

    manifest: DatasetManifest
    identities: tuple[str, ...]
    detections_by_ref: dict[str, list[Detection]]
    detection_shas: dict[str, str]
    score_rows: list[tuple[str, int, str, tuple[float, ...]]]
    correct: dict[str, bool]  # ref -> scripted to vote the true label
    input_side: int
    out_dir: Path

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / "manifest.csv"

    @property
    def detections_path(self) -> Path:
        return self.out_dir / "detections.csv"

    @property
    def scores_path(self) -> Path:
        return self.out_dir / "scores.csv"

    def scripted_correct_count(self) -> int:
        return sum(self.correct.values())

    def detector_backend(self) -> ScriptedDetectorBackend:
        by_sha: dict[str, list[Detection]] = {}
        for ref, dets in self.detections_by_ref.items():
            by_sha[self.detection_shas[ref]] = dets
        return ScriptedDetectorBackend(by_ref=dict(self.detections_by_ref), by_sha=by_sha)

    def classifier_backend(self) -> MockClassifierBackend:
        by_key = {(ref, ordinal): scores for ref, ordinal, _, scores in self.score_rows}
        by_sha = {sha: scores for _, _, sha, scores in self.score_rows if sha}
        return MockClassifierBackend(
            num_classes=len(self.identities),
            input_side=self.input_side,
            by_key=by_key,
            by_sha=by_sha,
            identities=self.identities,
        )


def _distribution(k: int, top_class: int, top_score: float) -> tuple[float, ...]:
    rest = (1.0 - top_score) / (k - 1)
    return tuple(top_score if i == top_class else rest for i in range(k))


def _window_score_triple(truth: int, k: int, pattern: int, correct: bool):
    """Three per-window score vectors realizing the requested vote outcome."""
    wrong = (truth + 1) % k
    if not correct:
        return (
            _distribution(k, wrong, 0.75),
            _distribution(k, wrong, 0.75),
            _distribution(k, truth, 0.6),
        )
    if pattern == 0 or k < 3:
        if pattern % 2 == 1:
            return (
                _distribution(k, truth, 0.7),
                _distribution(k, truth, 0.7),
                _distribution(k, wrong, 0.6),
            )
        return tuple(_distribution(k, truth, 0.8) for _ in range(3))
    if pattern == 1:
        return (
            _distribution(k, truth, 0.7),
            _distribution(k, truth, 0.7),
            _distribution(k, wrong, 0.6),
        )
    # Three-way disagreement resolved by the strongest single activation.
    third = (truth + 2) % k
    return (
        _distribution(k, truth, 0.9),
        _distribution(k, wrong, 0.55),
        _distribution(k, third, 0.5),
    )


def _draw_image(rng: np.random.Generator, identity_idx: int, box: BoundingBox, width: int, height: int):
    """Procedural scene: hued gradient background with a textured box region."""
    base_hue = np.array(
        [60 + (identity_idx * 37) % 160, 40 + (identity_idx * 53) % 140, 50 + (identity_idx * 71) % 150],
        dtype=np.float64,
    )
    rows = np.linspace(0.4, 1.0, height)[:, None, None]
    pixels = rows * base_hue[None, None, :] + rng.normal(0, 6, (height, width, 3))
    ys, xs = np.mgrid[box.y : box.bottom, box.x : box.right]
    stripe = ((xs + 2 * ys) // 9) % 2
    body = np.where(stripe[..., None] == 0, 255.0 - base_hue, base_hue * 0.5)
    pixels[box.y : box.bottom, box.x : box.right] = body + rng.normal(0, 10, body.shape)
    return np.clip(pixels, 0, 255).astype(np.uint8)


def _place_box(rng: np.random.Generator, width: int, height: int, aspect: float) -> BoundingBox:
    margin = 8
    if aspect >= 1.0:
        short = int(rng.integers(56, 96))
        w, h = min(int(short * aspect), width - 2 * margin), short
    else:
        short = int(rng.integers(56, 96))
        w, h = short, min(int(short / aspect), height - 2 * margin)
    x = int(rng.integers(margin, width - margin - w + 1))
    y = int(rng.integers(margin, height - margin - h + 1))
    return BoundingBox(x=x, y=y, w=w, h=h)


def generate_fixture_set(
    num_identities: int,
    images_per_identity: int,
    seed: int,
    out_dir: str | Path,
    accuracy_fraction: float = 1.0,
    input_side: int = DEFAULT_INPUT_SIDE,
) -> FixtureSet:
    """Write a complete synthetic fixture set under ``out_dir``.

    ``accuracy_fraction`` of the images (spread evenly over the manifest) get
    scores that vote the true label; the rest vote a deterministic wrong one.
    Regeneration with the same arguments is byte-identical.
    """
    if num_identities < 2:
        raise FixtureError(f"need at least 2 identities, got {num_identities}")
    if images_per_identity < 1:
        raise FixtureError(f"need at least 1 image per identity, got {images_per_identity}")
    if not 0.0 <= accuracy_fraction <= 1.0:
        raise FixtureError(f"accuracy_fraction must be in [0,1], got {accuracy_fraction}")

    out_path = Path(out_dir)
    (out_path / "images").mkdir(parents=True, exist_ok=True)
    identities = tuple(f"dog{i:02d}" for i in range(num_identities))

    manifest_rows: list[tuple[str, str]] = []
    detections_by_ref: dict[str, list[Detection]] = {}
    detection_shas: dict[str, str] = {}
    score_rows: list[tuple[str, int, str, tuple[float, ...]]] = []
    correct: dict[str, bool] = {}

    total = num_identities * images_per_identity
    global_idx = 0
    for identity_idx, identity in enumerate(identities):
        for image_idx in range(images_per_identity):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, global_idx])))
            width = int(rng.integers(240, 360))
            height = int(rng.integers(200, 300))
            box = _place_box(rng, width, height, _ASPECTS[global_idx % len(_ASPECTS)])
            pixels = _draw_image(rng, identity_idx, box, width, height)

            ref = f"images/{identity}_{image_idx}.png"
            save_image(pixels, out_path / ref)
            image = LoadedImage(pixels=pixels, path=out_path / ref, ref=ref)

            primary_conf = round(0.6 + 0.35 * float(rng.random()), 4)
            dets = [Detection(box=box, class_label="dog", confidence=primary_conf)]
            if global_idx % 3 == 0:
                dets.append(
                    Detection(
                        box=BoundingBox(x=2, y=2, w=40, h=60), class_label="person", confidence=0.97
                    )
                )
            if global_idx % 5 == 2:
                dets.append(
                    Detection(box=BoundingBox(x=width - 30, y=4, w=24, h=24), class_label="dog", confidence=0.3)
                )
            secondary_box = None
            if global_idx % 4 == 1:
                secondary_box = BoundingBox(x=4, y=height - 52, w=44, h=44)
                dets.append(
                    Detection(
                        box=secondary_box,
                        class_label="dog",
                        confidence=round(max(0.5, primary_conf - 0.08), 4),
                    )
                )
            detections_by_ref[ref] = dets
            detection_shas[ref] = pixel_sha256(pixels)

            is_correct = math.floor(accuracy_fraction * (global_idx + 1)) - math.floor(
                accuracy_fraction * global_idx
            ) >= 1
            correct[ref] = is_correct
            triple = _window_score_triple(identity_idx, num_identities, global_idx % 3, is_correct)
            windows = extract_windows(image, box, input_side)
            for ordinal, (window, scores) in enumerate(zip(windows, triple)):
                score_rows.append((ref, ordinal, pixel_sha256(window.pixels), scores))
            if secondary_box is not None:
                for ordinal, window in enumerate(extract_windows(image, secondary_box, input_side)):
                    score_rows.append((ref, 3 + ordinal, pixel_sha256(window.pixels), triple[ordinal]))

            manifest_rows.append((ref, identity))
            global_idx += 1

    manifest = build_manifest(manifest_rows, root=out_path)
    save_manifest(manifest, out_path / "manifest.csv")
    write_detection_table(
        out_path / "detections.csv",
        {ref: (detection_shas[ref], dets) for ref, dets in detections_by_ref.items()},
    )
    write_score_table(out_path / "scores.csv", identities, score_rows)

    assert len(manifest.entries) == total
    return FixtureSet(
        manifest=manifest,
        identities=identities,
        detections_by_ref=detections_by_ref,
        detection_shas=detection_shas,
        score_rows=score_rows,
        correct=correct,
        input_side=input_side,
        out_dir=out_path,
    )
