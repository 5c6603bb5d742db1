"""K-fold cross-validation of the full pipeline, with report serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean

from .dataset import DatasetManifest, FoldAssignment, LabeledImage
from .errors import ManifestError, PetIdentError
from .identification import NoIdentification, identify
from .images import load_image

REPORT_SCHEMA = "petident-report/1"


def accuracy(predictions: list[int], truths: list[int]) -> float:
    """Fraction of positions where prediction equals truth."""
    if len(predictions) != len(truths):
        raise PetIdentError(f"length mismatch: {len(predictions)} predictions, {len(truths)} truths")
    if not predictions:
        raise PetIdentError("accuracy of empty lists is undefined")
    return sum(p == t for p, t in zip(predictions, truths)) / len(predictions)


@dataclass(frozen=True)
class PerImageRecord:
    image_path: str
    truth: str
    predicted: str | None
    decision_rule: str | None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "image_path": self.image_path,
            "truth": self.truth,
            "predicted": self.predicted,
            "decision_rule": self.decision_rule,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class EvaluationReport:
    """Cross-validation outcome.

    ``confusion`` counts only images that produced a prediction (rows truth,
    columns prediction); images with no detection are tallied per identity in
    ``no_detection`` and count as errors in every accuracy figure.
    ``mean_accuracy`` is the unweighted mean over folds; ``overall_accuracy``
    is trace(confusion) / total entry count.
    """

    identities: tuple[str, ...]
    per_fold_accuracy: tuple[float, ...]
    mean_accuracy: float
    overall_accuracy: float
    confusion: tuple[tuple[int, ...], ...]
    no_detection: tuple[int, ...]
    per_image_records: tuple[PerImageRecord, ...]
    config_echo: dict
    schema: str = REPORT_SCHEMA

    @property
    def total_evaluated(self) -> int:
        return sum(sum(row) for row in self.confusion) + sum(self.no_detection)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "identities": list(self.identities),
            "per_fold_accuracy": list(self.per_fold_accuracy),
            "mean_accuracy": self.mean_accuracy,
            "overall_accuracy": self.overall_accuracy,
            "confusion": [list(row) for row in self.confusion],
            "no_detection": list(self.no_detection),
            "per_image_records": [r.to_dict() for r in self.per_image_records],
            "config_echo": self.config_echo,
        }

    @classmethod
    def from_dict(cls, data: dict) -> EvaluationReport:
        if data.get("schema") != REPORT_SCHEMA:
            raise PetIdentError(f"unexpected report schema {data.get('schema')!r}")
        return cls(
            identities=tuple(data["identities"]),
            per_fold_accuracy=tuple(data["per_fold_accuracy"]),
            mean_accuracy=data["mean_accuracy"],
            overall_accuracy=data["overall_accuracy"],
            confusion=tuple(tuple(row) for row in data["confusion"]),
            no_detection=tuple(data["no_detection"]),
            per_image_records=tuple(
                PerImageRecord(
                    image_path=r["image_path"],
                    truth=r["truth"],
                    predicted=r["predicted"],
                    decision_rule=r["decision_rule"],
                    reason=r.get("reason"),
                )
                for r in data["per_image_records"]
            ),
            config_echo=data["config_echo"],
        )


def evaluate(
    manifest: DatasetManifest,
    folds: FoldAssignment,
    pipeline_factory,
    min_confidence: float = 0.5,
    dog_label: str = "dog",
    voting_variant: str = "max_single",
    config_echo: dict | None = None,
) -> EvaluationReport:
    """Hold out each fold in turn, identify its images with a pipeline bound
    to the remaining entries, and aggregate accuracies and confusion counts.

    ``pipeline_factory(fold, train_entries)`` returns the (detector,
    classifier) pair to use for that fold; for scripted backends binding is a
    no-op, for model files it loads the per-fold model.
    """
    n = len(manifest.entries)
    if len(folds.fold_of) != n:
        raise ManifestError(f"fold assignment covers {len(folds.fold_of)} entries, manifest has {n}")
    k_classes = manifest.num_identities
    identity_order = manifest.identity_order()

    confusion = [[0] * k_classes for _ in range(k_classes)]
    no_detection = [0] * k_classes
    records: list[PerImageRecord | None] = [None] * n
    per_fold_accuracy: list[float] = []
    total_correct = 0

    for fold in range(folds.k):
        held = folds.held_out(fold)
        if not held:
            continue
        train: list[LabeledImage] = [manifest.entries[i] for i in folds.training(fold)]
        detector, classifier = pipeline_factory(fold, train)
        if classifier.num_classes != k_classes:
            raise ManifestError(
                f"classifier for fold {fold} has {classifier.num_classes} classes, "
                f"manifest has {k_classes}"
            )
        fold_correct = 0
        for idx in held:
            entry = manifest.entries[idx]
            image = load_image(manifest.resolve_path(entry), ref=entry.image_path)
            result = identify(
                image,
                detector,
                classifier,
                min_confidence=min_confidence,
                dog_label=dog_label,
                voting_variant=voting_variant,
            )
            truth_idx = manifest.class_index(entry.identity)
            if isinstance(result, NoIdentification):
                no_detection[truth_idx] += 1
                records[idx] = PerImageRecord(
                    image_path=entry.image_path,
                    truth=entry.identity,
                    predicted=None,
                    decision_rule=None,
                    reason=result.reason,
                )
                continue
            predicted_identity = identity_order[result.class_index]
            confusion[truth_idx][result.class_index] += 1
            if result.class_index == truth_idx:
                fold_correct += 1
            records[idx] = PerImageRecord(
                image_path=entry.image_path,
                truth=entry.identity,
                predicted=predicted_identity,
                decision_rule=result.decision_rule,
            )
        per_fold_accuracy.append(fold_correct / len(held))
        total_correct += fold_correct

    return EvaluationReport(
        identities=identity_order,
        per_fold_accuracy=tuple(per_fold_accuracy),
        mean_accuracy=fmean(per_fold_accuracy) if per_fold_accuracy else 0.0,
        overall_accuracy=total_correct / n,
        confusion=tuple(tuple(row) for row in confusion),
        no_detection=tuple(no_detection),
        per_image_records=tuple(records),
        config_echo=dict(config_echo or {}),
    )


def write_report(report: EvaluationReport, path: str | Path) -> None:
    p = Path(path)
    if not p.parent.is_dir():
        raise PetIdentError(f"report directory does not exist: {p.parent}")
    p.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> EvaluationReport:
    p = Path(path)
    if not p.is_file():
        raise PetIdentError(f"report not found: {p}")
    return EvaluationReport.from_dict(json.loads(p.read_text(encoding="utf-8")))
