from __future__ import annotations

import json

import numpy as np
import pytest

from petident_trainer import build_model, export_model, forward_probabilities


@pytest.fixture()
def exported(quick_trained, tmp_path):
    model, _ = quick_trained
    path = export_model(model, tmp_path / "toy.onnx", [f"dog{i:02d}" for i in range(4)], input_side=128)
    return model, path


def test_sidecar_contents(exported):
    _, path = exported
    sidecar = json.loads(path.with_suffix(".json").read_text())
    assert sidecar["schema"] == "petident-classifier/1"
    assert sidecar["input_layout"] == "nchw"
    assert sidecar["input_side"] == 128
    assert sidecar["scaling"] == "inception"
    assert sidecar["identities"] == ["dog00", "dog01", "dog02", "dog03"]


def test_identity_count_mismatch_rejected(quick_trained, tmp_path):
    model, _ = quick_trained
    with pytest.raises(ValueError, match="identities"):
        export_model(model, tmp_path / "bad.onnx", ["a", "b"], input_side=128)


def test_inception_export_unsupported(tmp_path):
    model = build_model(2, base_architecture="inception_v3")
    with pytest.raises(ValueError, match="compact"):
        export_model(model, tmp_path / "x.onnx", ["a", "b"], input_side=299)


def test_runtime_loads_exported_model(exported):
    petident = pytest.importorskip("petident")
    model, path = exported
    backend = petident.OnnxClassifierBackend(path)
    assert backend.identities == ("dog00", "dog01", "dog02", "dog03")
    assert backend.input_side == 128

    rng = np.random.default_rng(5)
    pixels = rng.integers(0, 256, (128, 128, 3), dtype=np.uint8)
    window = petident.Window(region=petident.BoundingBox(0, 0, 128, 128), pixels=pixels)
    scores = np.array(petident.classify(window, backend).scores)
    reference = forward_probabilities(model, pixels)
    assert np.abs(scores - reference).max() < 1e-4


def test_missing_sidecar_rejected_by_runtime(exported, tmp_path):
    petident = pytest.importorskip("petident")
    _, path = exported
    orphan = tmp_path / "orphan.onnx"
    orphan.write_bytes(path.read_bytes())
    with pytest.raises(petident.BackendError, match="sidecar"):
        petident.OnnxClassifierBackend(orphan)
