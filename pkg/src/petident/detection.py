"""Object detection backends and dog-detection selection rules."""

from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BackendError, FixtureError
from .images import LoadedImage, pixel_sha256

DEFAULT_MIN_CONFIDENCE = 0.5
DEFAULT_DOG_LABEL = "dog"

DETECTION_TABLE_HEADER = (
    "image_path",
    "pixel_sha256",
    "x",
    "y",
    "w",
    "h",
    "class_label",
    "confidence",
)


@dataclass(frozen=True)
class BoundingBox:
    """Pixel-space box: left, top, width, height."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    def clamped(self, image_width: int, image_height: int) -> BoundingBox | None:
        """Clip to image bounds; None when nothing remains."""
        x0 = max(self.x, 0)
        y0 = max(self.y, 0)
        x1 = min(self.right, image_width)
        y1 = min(self.bottom, image_height)
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            return None
        return BoundingBox(x=x0, y=y0, w=x1 - x0, h=y1 - y0)

    def contains(self, other: BoundingBox) -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.right <= self.right
            and other.bottom <= self.bottom
        )

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}


@dataclass(frozen=True)
class Detection:
    """A class-labeled box with confidence in [0, 1]."""

    box: BoundingBox
    class_label: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")

    def to_dict(self) -> dict:
        return {
            "box": self.box.to_dict(),
            "class_label": self.class_label,
            "confidence": self.confidence,
        }


class DetectorBackend(ABC):
    """Produces raw detections for an image.

    ``concurrent_safe`` declares whether detect calls may run concurrently;
    the pipeline serializes calls to backends that declare False.
    """

    concurrent_safe: bool = True

    @abstractmethod
    def raw_detections(self, image: LoadedImage) -> list[Detection]:
        ...


def detect(image: LoadedImage, backend: DetectorBackend) -> list[Detection]:
    """Run the backend and normalize its output.

    Boxes are clamped to image bounds (zero-area boxes dropped) and results
    ordered by descending confidence, ties keeping backend order.
    """
    raw = backend.raw_detections(image)
    clamped: list[Detection] = []
    for det in raw:
        box = det.box.clamped(image.width, image.height)
        if box is None:
            continue
        clamped.append(Detection(box=box, class_label=det.class_label, confidence=det.confidence))
    return sorted(clamped, key=lambda d: -d.confidence)


def filter_dogs(
    detections: list[Detection],
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
    dog_label: str = DEFAULT_DOG_LABEL,
) -> list[Detection]:
    """Keep dog-class detections at or above the confidence threshold, in order."""
    if not 0.0 <= min_confidence <= 1.0:
        raise ValueError(f"min_confidence must be in [0,1], got {min_confidence}")
    return [d for d in detections if d.class_label == dog_label and d.confidence >= min_confidence]


def select_primary(detections: list[Detection]) -> Detection | None:
    """Highest-confidence detection; ties go to larger area, then earlier position."""
    best: Detection | None = None
    best_key: tuple[float, int] | None = None
    for det in detections:
        key = (det.confidence, det.box.area)
        if best_key is None or key > best_key:
            best, best_key = det, key
    return best


class ScriptedDetectorBackend(DetectorBackend):
    """Fixture-driven backend returning pre-recorded detections.

    Lookups go by the image's logical reference first, then by pixel
    fingerprint; images with no recorded detections yield an empty list.
    """

    concurrent_safe = True

    def __init__(
        self,
        by_ref: dict[str, list[Detection]] | None = None,
        by_sha: dict[str, list[Detection]] | None = None,
    ):
        self.by_ref = dict(by_ref or {})
        self.by_sha = dict(by_sha or {})

    def raw_detections(self, image: LoadedImage) -> list[Detection]:
        if image.ref is not None and image.ref in self.by_ref:
            return list(self.by_ref[image.ref])
        sha = pixel_sha256(image.pixels)
        return list(self.by_sha.get(sha, []))

    @classmethod
    def from_csv(cls, path: str | Path) -> ScriptedDetectorBackend:
        p = Path(path)
        if not p.is_file():
            raise FixtureError(f"detection table not found: {p}")
        by_ref: dict[str, list[Detection]] = {}
        by_sha: dict[str, list[Detection]] = {}
        with p.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            missing = set(DETECTION_TABLE_HEADER) - set(reader.fieldnames or ())
            if missing:
                raise FixtureError(f"detection table {p} missing columns: {sorted(missing)}")
            for row in reader:
                try:
                    det = Detection(
                        box=BoundingBox(int(row["x"]), int(row["y"]), int(row["w"]), int(row["h"])),
                        class_label=row["class_label"],
                        confidence=float(row["confidence"]),
                    )
                except ValueError as exc:
                    raise FixtureError(f"bad detection row for {row.get('image_path')}: {exc}") from exc
                by_ref.setdefault(row["image_path"], []).append(det)
                if row["pixel_sha256"]:
                    by_sha.setdefault(row["pixel_sha256"], []).append(det)
        return cls(by_ref=by_ref, by_sha=by_sha)


def write_detection_table(path: str | Path, rows: dict[str, tuple[str, list[Detection]]]) -> None:
    """Write a scripted-detection CSV; rows map ref -> (pixel_sha, detections)."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(DETECTION_TABLE_HEADER)
        for ref, (sha, detections) in rows.items():
            for det in detections:
                writer.writerow(
                    [ref, sha, det.box.x, det.box.y, det.box.w, det.box.h, det.class_label, det.confidence]
                )


def load_label_map(path: str | Path) -> dict[int, str]:
    """Read a text label map: either ``<index> <name>`` lines or one name per
    line (implicit 0-based indices)."""
    p = Path(path)
    if not p.is_file():
        raise BackendError(f"label map not found: {p}")
    mapping: dict[int, str] = {}
    implicit = 0
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) == 2 and parts[0].lstrip("-").isdigit():
            mapping[int(parts[0])] = parts[1].strip()
        else:
            mapping[implicit] = line
            implicit += 1
    if not mapping:
        raise BackendError(f"label map {p} contains no entries")
    return mapping


class OnnxDetectorBackend(DetectorBackend):
    """SSD-style ONNX detector.

    Expects a model whose outputs are (boxes, classes, scores): boxes
    ``[1,N,4]`` or ``[N,4]`` with normalized (ymin, xmin, ymax, xmax)
    coordinates, class indices resolved through the label map. Output tensors
    are matched by name (``detection_boxes``/``detection_classes``/
    ``detection_scores``) when present, positionally otherwise.
    """

    concurrent_safe = True

    def __init__(self, model_path: str | Path, label_map_path: str | Path):
        from .onnxlite import GraphExecutor, load_model

        p = Path(model_path)
        if not p.is_file():
            raise BackendError(f"detector model not found: {p}")
        try:
            self.model = load_model(p)
            self.executor = GraphExecutor(self.model)
        except Exception as exc:
            raise BackendError(f"cannot load detector model {p}: {exc}") from exc
        self.label_map = load_label_map(label_map_path)
        if len(self.model.inputs) != 1:
            raise BackendError(f"detector model must have one input, has {len(self.model.inputs)}")
        if len(self.model.outputs) < 3:
            raise BackendError("detector model must output boxes, classes, and scores")

    def _output_order(self) -> tuple[str, str, str]:
        names = [o.name for o in self.model.outputs]
        preferred = ("detection_boxes", "detection_classes", "detection_scores")
        if all(name in names for name in preferred):
            return preferred
        return names[0], names[1], names[2]

    def raw_detections(self, image: LoadedImage) -> list[Detection]:
        input_name = self.model.inputs[0].name
        batch = image.pixels[np.newaxis].astype(np.float32)
        results = self.executor.run({input_name: batch})
        boxes_name, classes_name, scores_name = self._output_order()
        boxes = np.asarray(results[boxes_name], dtype=np.float64).reshape(-1, 4)
        classes = np.asarray(results[classes_name]).reshape(-1)
        scores = np.asarray(results[scores_name], dtype=np.float64).reshape(-1)
        if not (len(boxes) == len(classes) == len(scores)):
            raise BackendError(
                f"detector output lengths disagree: {len(boxes)} boxes, "
                f"{len(classes)} classes, {len(scores)} scores"
            )
        detections: list[Detection] = []
        for (ymin, xmin, ymax, xmax), cls, score in zip(boxes, classes, scores):
            x = int(round(xmin * image.width))
            y = int(round(ymin * image.height))
            w = int(round((xmax - xmin) * image.width))
            h = int(round((ymax - ymin) * image.height))
            if w <= 0 or h <= 0:
                continue
            label = self.label_map.get(int(cls), f"class_{int(cls)}")
            detections.append(
                Detection(
                    box=BoundingBox(x=x, y=y, w=w, h=h),
                    class_label=label,
                    confidence=float(min(max(score, 0.0), 1.0)),
                )
            )
        return detections
