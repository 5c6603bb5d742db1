"""Fusing the three window scores into one identity prediction."""

from __future__ import annotations

from dataclasses import dataclass

from .detection import Detection, DetectorBackend, detect, filter_dogs, select_primary
from .errors import PetIdentError, StageError
from .images import LoadedImage
from .inference import ClassifierBackend, ScoreVector, classify_batch
from .windowing import extract_windows

MAJORITY = "majority"
STRONGEST_ACTIVATION = "strongest_activation"

VOTING_MAX_SINGLE = "max_single"
VOTING_SUM_SCORES = "sum_scores"

REASON_NO_DOG = "no_dog_detected"


@dataclass(frozen=True)
class IdentityPrediction:
    """Fused pipeline output for one dog detection."""

    identity: str
    class_index: int
    confidence: float
    window_labels: tuple[int, int, int]
    window_scores: tuple[ScoreVector, ScoreVector, ScoreVector]
    decision_rule: str
    detection: Detection | None = None

    def to_dict(self, top_k: int = 5) -> dict:
        return {
            "identity": self.identity,
            "class_index": self.class_index,
            "confidence": self.confidence,
            "decision_rule": self.decision_rule,
            "window_labels": list(self.window_labels),
            "windows": [
                {"label": label, "top_scores": [[c, s] for c, s in vec.top_k(top_k)]}
                for label, vec in zip(self.window_labels, self.window_scores)
            ],
            "detection_box": self.detection.box.to_dict() if self.detection else None,
        }


@dataclass(frozen=True)
class NoIdentification:
    """Pipeline outcome when no dog could be identified; falsy on purpose."""

    reason: str

    def __bool__(self) -> bool:
        return False


def vote(
    scores,
    identities: tuple[str, ...] | None = None,
    variant: str = VOTING_MAX_SINGLE,
) -> IdentityPrediction:
    """Majority vote over the three per-window argmax labels.

    A label carried by at least two windows wins outright. With three
    distinct labels, the fallback picks the label owning the single largest
    activation across the windows (``max_single``, ties to the lowest window
    then class index) or the largest summed score (``sum_scores``).
    Confidence is the winning class's mean score across the three windows.
    """
    if len(scores) != 3:
        raise PetIdentError(f"vote needs exactly 3 score vectors, got {len(scores)}")
    k = len(scores[0])
    if k == 0:
        raise PetIdentError("score vectors are empty")
    if any(len(vec) != k for vec in scores):
        raise PetIdentError(f"score vector lengths disagree: {[len(v) for v in scores]}")
    if variant not in (VOTING_MAX_SINGLE, VOTING_SUM_SCORES):
        raise PetIdentError(f"unknown voting variant {variant!r}")

    labels = tuple(vec.argmax() for vec in scores)
    a, b, c = labels
    if a == b or a == c:
        winner, rule = a, MAJORITY
    elif b == c:
        winner, rule = b, MAJORITY
    else:
        if variant == VOTING_MAX_SINGLE:
            winner = min(
                range(3), key=lambda w: (-scores[w][labels[w]], w, labels[w])
            )
            winner = labels[winner]
        else:
            sums = [sum(vec[i] for vec in scores) for i in range(k)]
            winner = max(range(k), key=lambda i: (sums[i], -i))
        rule = STRONGEST_ACTIVATION

    confidence = sum(vec[winner] for vec in scores) / 3.0
    return IdentityPrediction(
        identity=identities[winner] if identities else str(winner),
        class_index=winner,
        confidence=confidence,
        window_labels=labels,
        window_scores=tuple(scores),
        decision_rule=rule,
    )


def _run_stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, str(exc)) from exc


def identify(
    image: LoadedImage,
    detector: DetectorBackend,
    classifier: ClassifierBackend,
    min_confidence: float = 0.5,
    dog_label: str = "dog",
    voting_variant: str = VOTING_MAX_SINGLE,
) -> IdentityPrediction | NoIdentification:
    """Full pipeline for one image: detect, window, classify, vote.

    Windows are extracted at the classifier's input side. Returns a falsy
    ``NoIdentification`` when no dog passes the detection filter; backend
    failures raise ``StageError`` naming the failing stage.
    """
    detections = _run_stage("detect", detect, image, detector)
    dogs = _run_stage("filter", filter_dogs, detections, min_confidence, dog_label)
    primary = select_primary(dogs)
    if primary is None:
        return NoIdentification(reason=REASON_NO_DOG)
    windows = _run_stage("window", extract_windows, image, primary.box, classifier.input_side)
    keys = [(image.ref, i) for i in range(3)] if image.ref is not None else None
    vectors = _run_stage("classify", classify_batch, windows, classifier, keys)
    prediction = _run_stage("vote", vote, vectors, classifier.identities, voting_variant)
    return IdentityPrediction(
        identity=prediction.identity,
        class_index=prediction.class_index,
        confidence=prediction.confidence,
        window_labels=prediction.window_labels,
        window_scores=prediction.window_scores,
        decision_rule=prediction.decision_rule,
        detection=primary,
    )


def identify_all(
    image: LoadedImage,
    detector: DetectorBackend,
    classifier: ClassifierBackend,
    min_confidence: float = 0.5,
    dog_label: str = "dog",
    voting_variant: str = VOTING_MAX_SINGLE,
) -> list[IdentityPrediction]:
    """One prediction per dog detection (batch multi-dog mode).

    Mock-backend fixture keys are only defined for the primary detection, so
    this path classifies every dog by pixel fingerprint or model inference.
    """
    detections = _run_stage("detect", detect, image, detector)
    dogs = _run_stage("filter", filter_dogs, detections, min_confidence, dog_label)
    primary = select_primary(dogs)
    predictions = []
    for det in dogs:
        windows = _run_stage("window", extract_windows, image, det.box, classifier.input_side)
        keys = None
        if image.ref is not None and det == primary:
            keys = [(image.ref, i) for i in range(3)]
        vectors = _run_stage("classify", classify_batch, windows, classifier, keys)
        fused = _run_stage("vote", vote, vectors, classifier.identities, voting_variant)
        predictions.append(
            IdentityPrediction(
                identity=fused.identity,
                class_index=fused.class_index,
                confidence=fused.confidence,
                window_labels=fused.window_labels,
                window_scores=fused.window_scores,
                decision_rule=fused.decision_rule,
                detection=det,
            )
        )
    return predictions
