from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from petident import generate_fixture_set, read_report
from petident.cli import EXIT_FATAL, EXIT_OK, EXIT_PARTIAL, main
from petident.dataset import build_manifest, save_manifest
from petident.images import save_image


@pytest.fixture(scope="module")
def cli_fixture(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_fixture")
    return generate_fixture_set(3, 3, seed=17, out_dir=out, input_side=96)


def fixture_flags(fs):
    return [
        "--detector-fixtures",
        str(fs.detections_path),
        "--classifier-fixtures",
        str(fs.scores_path),
        "--input-side",
        str(fs.input_side),
    ]


def image_paths(fs):
    return [str(fs.out_dir / e.image_path) for e in fs.manifest.entries]


class TestDetectCommand:
    def test_one_image_document(self, cli_fixture, tmp_path):
        fs = cli_fixture
        path = image_paths(fs)[0]
        # scripted tables key on the manifest-relative ref, so re-key by
        # the CLI argument path via the sha fallback
        code = main(["detect", path, "--out", str(tmp_path), *fixture_flags(fs)])
        assert code == EXIT_OK
        doc = json.loads((tmp_path / f"{Path(path).stem}.detections.json").read_text())
        assert doc["image"] == path
        assert len(doc["detections"]) >= 1
        assert doc["detections"][0]["class_label"] in ("dog", "person")
        assert doc["config"]["input_side"] == fs.input_side

    def test_unreadable_image_partial_failure(self, cli_fixture, tmp_path, capsys):
        fs = cli_fixture
        bogus = str(tmp_path / "missing.png")
        code = main(["detect", bogus, *fixture_flags(fs)])
        assert code == EXIT_PARTIAL
        assert bogus in capsys.readouterr().err

    def test_empty_input_list(self, cli_fixture):
        assert main(["detect", *fixture_flags(cli_fixture)]) == EXIT_OK

    def test_no_detector_configured(self, cli_fixture):
        assert main(["detect", image_paths(cli_fixture)[0]]) == EXIT_FATAL

    def test_jobs_preserve_input_order(self, cli_fixture, tmp_path, capsys):
        fs = cli_fixture
        paths = image_paths(fs)
        code = main(["detect", *paths, "--jobs", "4", "--out", str(tmp_path), *fixture_flags(fs)])
        assert code == EXIT_OK
        written = {p.name for p in tmp_path.glob("*.detections.json")}
        assert len(written) == len(paths)


class TestWindowsCommand:
    def test_three_files_and_offsets(self, tmp_path):
        rng = np.random.default_rng(0)
        save_image(rng.integers(0, 256, (120, 320, 3), dtype=np.uint8), tmp_path / "img.png")
        out = tmp_path / "win"
        code = main(
            ["windows", str(tmp_path / "img.png"), "--box", "0,0,300,100", "--out", str(out), "--input-side", "64"]
        )
        assert code == EXIT_OK
        assert sorted(p.name for p in out.glob("img_w*.png")) == ["img_w0.png", "img_w1.png", "img_w2.png"]
        doc = json.loads((out / "img_windows.json").read_text())
        assert doc["offsets"] == [0, 100, 200]

    def test_square_box_identical_files(self, tmp_path):
        rng = np.random.default_rng(1)
        save_image(rng.integers(0, 256, (200, 200, 3), dtype=np.uint8), tmp_path / "sq.png")
        out = tmp_path / "win"
        code = main(["windows", str(tmp_path / "sq.png"), "--box", "10,10,100,100", "--out", str(out), "--input-side", "32"])
        assert code == EXIT_OK
        w0 = (out / "sq_w0.png").read_bytes()
        assert w0 == (out / "sq_w1.png").read_bytes() == (out / "sq_w2.png").read_bytes()

    def test_zero_area_box_fails(self, tmp_path):
        rng = np.random.default_rng(2)
        save_image(rng.integers(0, 256, (50, 50, 3), dtype=np.uint8), tmp_path / "z.png")
        code = main(["windows", str(tmp_path / "z.png"), "--box", "0,0,0,10", "--out", str(tmp_path / "w")])
        assert code == EXIT_FATAL


class TestAugmentCommand:
    def _manifest(self, tmp_path, count=10):
        rng = np.random.default_rng(3)
        rows = []
        for i in range(count):
            name = f"img{i}.png"
            save_image(rng.integers(0, 256, (48, 48, 3), dtype=np.uint8), tmp_path / name)
            rows.append((name, f"id{i % 2}"))
        manifest = build_manifest(rows, root=tmp_path)
        save_manifest(manifest, tmp_path / "manifest.csv")
        return tmp_path / "manifest.csv"

    def test_factor_16_writes_160_files(self, tmp_path, capsys):
        manifest = self._manifest(tmp_path, count=10)
        out = tmp_path / "aug"
        code = main(["augment", str(manifest), "--out", str(out), "--seed", "5"])
        assert code == EXIT_OK
        assert len(list(out.glob("*_aug*.png"))) == 160
        doc = json.loads(capsys.readouterr().out)
        assert doc["output_rows"] == 160
        rows = (out / "manifest.csv").read_text().strip().splitlines()
        assert len(rows) == 161  # header + 160 rows

    def test_factor_one_copies_only(self, tmp_path, capsys):
        manifest = self._manifest(tmp_path, count=3)
        out = tmp_path / "aug1"
        code = main(["augment", str(manifest), "--out", str(out), "--factor", "1"])
        assert code == EXIT_OK
        files = sorted(out.glob("*.png"))
        assert [f.name for f in files] == ["img0_aug0.png", "img1_aug0.png", "img2_aug0.png"]
        from petident.images import load_image

        for i, f in enumerate(files):
            assert np.array_equal(load_image(f).pixels, load_image(tmp_path / f"img{i}.png").pixels)

    def test_added_counting_mode(self, tmp_path, capsys):
        manifest = self._manifest(tmp_path, count=2)
        out = tmp_path / "aug2"
        code = main(["augment", str(manifest), "--out", str(out), "--factor", "4", "--counting", "added"])
        assert code == EXIT_OK
        assert len(list(out.glob("*_aug*.png"))) == 10  # 2 * (4 + 1)

    def test_fixed_seed_rerun_byte_identical(self, tmp_path):
        manifest = self._manifest(tmp_path, count=2)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["augment", str(manifest), "--out", str(out_a), "--factor", "4", "--seed", "9"]) == EXIT_OK
        assert main(["augment", str(manifest), "--out", str(out_b), "--factor", "4", "--seed", "9"]) == EXIT_OK
        for file_a in sorted(out_a.iterdir()):
            assert file_a.read_bytes() == (out_b / file_a.name).read_bytes()


class TestIdentifyCommand:
    def test_scripted_prediction(self, cli_fixture, tmp_path, capsys):
        fs = cli_fixture
        entry = fs.manifest.entries[0]
        path = str(fs.out_dir / entry.image_path)
        code = main(["identify", path, *fixture_flags(fs)])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["prediction"]["identity"] == entry.identity
        assert doc["prediction"]["decision_rule"] in ("majority", "strongest_activation")
        assert len(doc["prediction"]["windows"]) == 3
        assert doc["reason"] is None

    def test_no_dog_document(self, cli_fixture, tmp_path, capsys):
        fs = cli_fixture
        rng = np.random.default_rng(9)
        lone = tmp_path / "nodog.png"
        save_image(rng.integers(0, 256, (80, 80, 3), dtype=np.uint8), lone)
        code = main(["identify", str(lone), *fixture_flags(fs)])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["prediction"] is None
        assert doc["reason"] == "no_dog_detected"

    def test_missing_model_exit_1(self, cli_fixture, capsys):
        fs = cli_fixture
        code = main(
            [
                "identify",
                image_paths(fs)[0],
                "--detector-fixtures",
                str(fs.detections_path),
                "--classifier-model",
                "/nonexistent/model.onnx",
            ]
        )
        assert code == EXIT_FATAL
        assert "not found" in capsys.readouterr().err

    def test_all_dogs_flag(self, cli_fixture, capsys):
        fs = cli_fixture
        multi_ref = next(
            ref
            for ref, dets in fs.detections_by_ref.items()
            if sum(d.class_label == "dog" and d.confidence >= 0.5 for d in dets) > 1
        )
        path = str(fs.out_dir / multi_ref)
        code = main(["identify", path, "--all-dogs", *fixture_flags(fs)])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["predictions"]) == 2


class TestEvaluateCommand:
    def test_perfect_fixture_reports_one(self, cli_fixture, tmp_path, capsys):
        fs = cli_fixture
        report_path = tmp_path / "report.json"
        code = main(
            ["evaluate", str(fs.manifest_path), "--k", "3", "--out", str(report_path), *fixture_flags(fs)]
        )
        assert code == EXIT_OK
        report = read_report(report_path)
        assert report.mean_accuracy == 1.0
        assert report.config_echo["cv_k"] == 3
        assert "mean accuracy 1.0000" in capsys.readouterr().out

    def test_mismatched_folds_file(self, cli_fixture, tmp_path):
        fs = cli_fixture
        folds_file = tmp_path / "folds.json"
        folds_file.write_text(json.dumps({"k": 2, "seed": 0, "fold_of": [0, 1]}), encoding="utf-8")
        code = main(
            [
                "evaluate",
                str(fs.manifest_path),
                "--folds",
                str(folds_file),
                "--out",
                str(tmp_path / "r.json"),
                *fixture_flags(fs),
            ]
        )
        assert code == EXIT_FATAL

    def test_folds_file_round_trip(self, cli_fixture, tmp_path):
        fs = cli_fixture
        folds_file = tmp_path / "folds.json"
        assert main(["folds", str(fs.manifest_path), "--k", "3", "--seed", "4", "--out", str(folds_file)]) == EXIT_OK
        code = main(
            [
                "evaluate",
                str(fs.manifest_path),
                "--folds",
                str(folds_file),
                "--out",
                str(tmp_path / "r.json"),
                *fixture_flags(fs),
            ]
        )
        assert code == EXIT_OK


class TestFoldsCommand:
    def test_deterministic_output(self, cli_fixture, tmp_path):
        fs = cli_fixture
        out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["folds", str(fs.manifest_path), "--k", "3", "--seed", "7", "--out", str(out_a)]) == EXIT_OK
        assert main(["folds", str(fs.manifest_path), "--k", "3", "--seed", "7", "--out", str(out_b)]) == EXIT_OK
        assert json.loads(out_a.read_text())["fold_of"] == json.loads(out_b.read_text())["fold_of"]

    def test_stdout_when_no_out(self, cli_fixture, capsys):
        assert main(["folds", str(cli_fixture.manifest_path), "--k", "2"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["k"] == 2
        assert len(doc["fold_of"]) == 9


class TestConfigHandling:
    def test_config_file_with_flag_override(self, cli_fixture, tmp_path, capsys):
        fs = cli_fixture
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "detector_fixtures": str(fs.detections_path),
                    "classifier_fixtures": str(fs.scores_path),
                    "input_side": fs.input_side,
                    "cv_k": 9,
                }
            ),
            encoding="utf-8",
        )
        report_path = tmp_path / "r.json"
        code = main(["evaluate", str(fs.manifest_path), "--config", str(cfg), "--k", "3", "--out", str(report_path)])
        assert code == EXIT_OK
        assert read_report(report_path).config_echo["cv_k"] == 3  # flag beat the file

    def test_unknown_config_key_rejected(self, cli_fixture, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"fold_count": 3}), encoding="utf-8")
        code = main(["detect", "--config", str(cfg)])
        assert code == EXIT_FATAL
        assert "unknown config keys" in capsys.readouterr().err

    def test_config_echo_in_documents(self, cli_fixture, capsys):
        fs = cli_fixture
        code = main(["identify", image_paths(fs)[0], *fixture_flags(fs), "--voting-variant", "sum_scores"])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["config"]["voting_variant"] == "sum_scores"
        assert doc["config"]["augmentation"]["flip_probability"] == 0.5