"""Command-line orchestration of the pipeline stages.

Exit codes: 0 success, 1 fatal configuration or model error, 2 when some
per-item work failed (failures are listed on stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .augmentation import expand_files
from .config import PipelineConfig
from .dataset import FoldAssignment, load_manifest, make_folds
from .detection import (
    BoundingBox,
    DetectorBackend,
    OnnxDetectorBackend,
    ScriptedDetectorBackend,
    detect,
)
from .errors import ConfigError, PetIdentError
from .evaluation import evaluate, write_report
from .identification import NoIdentification, identify, identify_all
from .images import load_image, save_image
from .inference import ClassifierBackend, MockClassifierBackend, OnnxClassifierBackend
from .windowing import extract_windows, window_regions

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def build_detector(config: PipelineConfig) -> DetectorBackend:
    if config.detector_fixtures:
        return ScriptedDetectorBackend.from_csv(config.detector_fixtures)
    if config.detector_model_path:
        if not config.label_map_path:
            raise ConfigError("detector_model_path requires label_map_path")
        return OnnxDetectorBackend(config.detector_model_path, config.label_map_path)
    raise ConfigError("no detector configured: set detector_fixtures or detector_model_path")


def build_classifier(config: PipelineConfig) -> ClassifierBackend:
    if config.classifier_fixtures:
        return MockClassifierBackend.from_csv(config.classifier_fixtures, input_side=config.input_side)
    if config.classifier_model_path:
        return OnnxClassifierBackend(config.classifier_model_path)
    raise ConfigError("no classifier configured: set classifier_fixtures or classifier_model_path")


def _resolved_config(args) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {
        name: getattr(args, name, None)
        for name in (
            "min_confidence",
            "input_side",
            "seed",
            "voting_variant",
            "detector_fixtures",
            "classifier_fixtures",
            "detector_model_path",
            "classifier_model_path",
            "label_map_path",
        )
    }
    if getattr(args, "k", None) is not None:
        overrides["cv_k"] = args.k
    return config.with_overrides(**overrides)


def _emit(doc: dict, out_dir: str | None, filename: str) -> None:
    text = json.dumps(doc, indent=2)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / filename).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _map_images(paths: list[str], jobs: int, worker):
    """Apply worker to each path, preserving input order in the results.

    Results are (path, doc, error) triples; errors are captured per item.
    """

    def run_one(path: str):
        try:
            return path, worker(path), None
        except Exception as exc:  # per-item failure, reported not raised
            return path, None, exc

    if jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_one, paths))
    return [run_one(path) for path in paths]


def _effective_jobs(jobs: int, *backends) -> int:
    if any(not backend.concurrent_safe for backend in backends):
        return 1
    return jobs


def _report_failures(results) -> int:
    failures = [(path, err) for path, _, err in results if err is not None]
    for path, err in failures:
        print(f"error: {path}: {err}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_detect(args) -> int:
    config = _resolved_config(args)
    detector = build_detector(config)
    echo = config.to_dict()

    def worker(path: str) -> dict:
        image = load_image(path, ref=path)
        detections = detect(image, detector)
        return {"image": path, "detections": [d.to_dict() for d in detections], "config": echo}

    results = _map_images(args.images, _effective_jobs(args.jobs, detector), worker)
    for path, doc, err in results:
        if err is None:
            _emit(doc, args.out, f"{Path(path).stem}.detections.json")
    return _report_failures(results)


def cmd_windows(args) -> int:
    config = _resolved_config(args)
    try:
        x, y, w, h = (int(v) for v in args.box.split(","))
        box = BoundingBox(x=x, y=y, w=w, h=h)
    except ValueError as exc:
        raise ConfigError(f"bad --box {args.box!r}: {exc}") from exc
    image = load_image(args.image, ref=args.image)
    windows = extract_windows(image, box, config.input_side)
    regions = window_regions(box)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    files = []
    for i, window in enumerate(windows):
        name = f"{stem}_w{i}.png"
        save_image(window.pixels, out_dir / name)
        files.append(name)
    along_x = box.w >= box.h
    offsets = [(r.x - box.x) if along_x else (r.y - box.y) for r in regions]
    doc = {
        "image": args.image,
        "box": box.to_dict(),
        "regions": [r.to_dict() for r in regions],
        "offsets": offsets,
        "files": files,
        "config": config.to_dict(),
    }
    _emit(doc, args.out, f"{stem}_windows.json")
    return EXIT_OK


def cmd_augment(args) -> int:
    config = _resolved_config(args)
    factor = args.factor if args.factor is not None else config.augment_factor
    effective = factor + 1 if args.counting == "added" else factor
    manifest = load_manifest(args.manifest)
    expanded = expand_files(manifest, config.augmentation, effective, args.out)
    doc = {
        "manifest": args.manifest,
        "out_dir": args.out,
        "factor": factor,
        "counting": args.counting,
        "input_rows": len(manifest.entries),
        "output_rows": len(expanded.entries),
        "config": config.to_dict(),
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_identify(args) -> int:
    config = _resolved_config(args)
    detector = build_detector(config)
    classifier = build_classifier(config)
    echo = config.to_dict()

    def worker(path: str) -> dict:
        image = load_image(path, ref=path)
        if args.all_dogs:
            predictions = identify_all(
                image,
                detector,
                classifier,
                min_confidence=config.min_confidence,
                dog_label=config.dog_label,
                voting_variant=config.voting_variant,
            )
            return {"image": path, "predictions": [p.to_dict() for p in predictions], "config": echo}
        result = identify(
            image,
            detector,
            classifier,
            min_confidence=config.min_confidence,
            dog_label=config.dog_label,
            voting_variant=config.voting_variant,
        )
        if isinstance(result, NoIdentification):
            return {"image": path, "prediction": None, "reason": result.reason, "config": echo}
        return {"image": path, "prediction": result.to_dict(), "reason": None, "config": echo}

    results = _map_images(args.images, _effective_jobs(args.jobs, detector, classifier), worker)
    for path, doc, err in results:
        if err is None:
            _emit(doc, args.out, f"{Path(path).stem}.prediction.json")
    return _report_failures(results)


def _load_folds_file(path: str) -> FoldAssignment:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"folds file not found: {p}")
    data = json.loads(p.read_text(encoding="utf-8"))
    try:
        return FoldAssignment(k=data["k"], fold_of=tuple(data["fold_of"]), seed=data["seed"])
    except KeyError as exc:
        raise ConfigError(f"folds file {p} missing key {exc}") from exc


def cmd_folds(args) -> int:
    config = _resolved_config(args)
    manifest = load_manifest(args.manifest)
    folds = make_folds(manifest, config.cv_k, config.seed)
    doc = dict(folds.to_dict(), config=config.to_dict())
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = _resolved_config(args)
    manifest = load_manifest(args.manifest)
    folds = _load_folds_file(args.folds) if args.folds else make_folds(manifest, config.cv_k, config.seed)

    detector = build_detector(config)
    model_pattern = config.classifier_model_path
    per_fold_models = bool(model_pattern) and "{fold}" in str(model_pattern) and not config.classifier_fixtures
    shared_classifier = None if per_fold_models else build_classifier(config)

    def pipeline_factory(fold: int, train_entries):
        if per_fold_models:
            return detector, OnnxClassifierBackend(str(model_pattern).format(fold=fold))
        return detector, shared_classifier

    report = evaluate(
        manifest,
        folds,
        pipeline_factory,
        min_confidence=config.min_confidence,
        dog_label=config.dog_label,
        voting_variant=config.voting_variant,
        config_echo=config.to_dict(),
    )
    write_report(report, args.out)
    for i, acc in enumerate(report.per_fold_accuracy):
        print(f"fold {i}: accuracy {acc:.4f}")
    print(f"mean accuracy {report.mean_accuracy:.4f} over {len(report.per_fold_accuracy)} folds")
    print(f"overall accuracy {report.overall_accuracy:.4f} ({len(manifest.entries)} images)")
    print(f"report written to {args.out}")
    return EXIT_OK


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int, help="seed for folds and augmentation draws")
    parser.add_argument("--jobs", type=int, default=1, help="concurrent workers for per-image commands")
    parser.add_argument("--min-confidence", dest="min_confidence", type=float)
    parser.add_argument("--input-side", dest="input_side", type=int)
    parser.add_argument("--voting-variant", dest="voting_variant", choices=["max_single", "sum_scores"])
    parser.add_argument("--detector-fixtures", dest="detector_fixtures")
    parser.add_argument("--classifier-fixtures", dest="classifier_fixtures")
    parser.add_argument("--detector-model", dest="detector_model_path")
    parser.add_argument("--classifier-model", dest="classifier_model_path")
    parser.add_argument("--label-map", dest="label_map_path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="petident", description="Dog identification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="run the detector over images")
    p_detect.add_argument("images", nargs="*")
    p_detect.add_argument("--out", help="directory for per-image detection documents")
    _add_common_flags(p_detect)
    p_detect.set_defaults(fn=cmd_detect)

    p_windows = sub.add_parser("windows", help="extract the three square windows for a box")
    p_windows.add_argument("image")
    p_windows.add_argument("--box", required=True, help="x,y,w,h in pixels")
    p_windows.add_argument("--out", required=True, help="output directory")
    _add_common_flags(p_windows)
    p_windows.set_defaults(fn=cmd_windows)

    p_augment = sub.add_parser("augment", help="expand a manifest with augmented copies")
    p_augment.add_argument("manifest")
    p_augment.add_argument("--out", required=True, help="output directory")
    p_augment.add_argument("--factor", type=int, help="expansion factor (default from config, 16)")
    p_augment.add_argument(
        "--counting",
        choices=["total", "added"],
        default="total",
        help="whether the factor counts originals (total) or only new variants (added)",
    )
    _add_common_flags(p_augment)
    p_augment.set_defaults(fn=cmd_augment)

    p_identify = sub.add_parser("identify", help="identify the dog in each image")
    p_identify.add_argument("images", nargs="*")
    p_identify.add_argument("--out", help="directory for per-image prediction documents")
    p_identify.add_argument("--all-dogs", action="store_true", help="identify every dog detection")
    _add_common_flags(p_identify)
    p_identify.set_defaults(fn=cmd_identify)

    p_eval = sub.add_parser("evaluate", help="k-fold cross-validation over a manifest")
    p_eval.add_argument("manifest")
    p_eval.add_argument("--out", default="report.json", help="report file path")
    p_eval.add_argument("--k", type=int, help="fold count (default from config, 10)")
    p_eval.add_argument("--folds", help="use a saved fold assignment instead of computing one")
    _add_common_flags(p_eval)
    p_eval.set_defaults(fn=cmd_evaluate)

    p_folds = sub.add_parser("folds", help="compute and save a stratified fold assignment")
    p_folds.add_argument("manifest")
    p_folds.add_argument("--k", type=int, help="fold count (default from config, 10)")
    p_folds.add_argument("--out", help="output file (stdout when omitted)")
    _add_common_flags(p_folds)
    p_folds.set_defaults(fn=cmd_folds)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PetIdentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
