"""Per-window classification backends and the score-vector contract."""

from __future__ import annotations

import csv
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BackendError, FixtureError
from .images import pixel_sha256
from .windowing import Window

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-5
RENORMALIZE_RANGE = (0.99, 1.01)

SCALING_MODES = ("inception", "unit", "none")
CLASSIFIER_METADATA_SCHEMA = "petident-classifier/1"

SCORE_TABLE_FIXED_COLUMNS = ("image_path", "window_ordinal", "pixel_sha256")


@dataclass(frozen=True)
class ScoreVector:
    """Softmax-normalized per-identity activations for one window."""

    scores: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.scores)

    def __getitem__(self, index: int) -> float:
        return self.scores[index]

    def argmax(self) -> int:
        """Index of the largest score; ties resolve to the lowest index."""
        best = 0
        for i in range(1, len(self.scores)):
            if self.scores[i] > self.scores[best]:
                best = i
        return best

    def top_k(self, k: int) -> list[tuple[int, float]]:
        order = sorted(range(len(self.scores)), key=lambda i: (-self.scores[i], i))
        return [(i, self.scores[i]) for i in order[:k]]

    @classmethod
    def from_raw(cls, values) -> ScoreVector:
        """Validate raw backend output against the score contract.

        Sums within 1e-5 of 1 pass through; sums within [0.99, 1.01] are
        renormalized with a warning; anything else is a contract violation.
        """
        scores = tuple(float(v) for v in values)
        if not scores:
            raise BackendError("score vector is empty")
        if any(not np.isfinite(v) or v < 0 for v in scores):
            raise BackendError(f"scores must be finite and non-negative, got {scores}")
        total = sum(scores)
        if abs(total - 1.0) <= SUM_TOLERANCE:
            return cls(scores=scores)
        if RENORMALIZE_RANGE[0] <= total <= RENORMALIZE_RANGE[1]:
            logger.warning("renormalizing score vector with sum %.6f", total)
            return cls(scores=tuple(v / total for v in scores))
        raise BackendError(f"score vector sums to {total:.6f}, outside renormalizable range")


class ClassifierBackend(ABC):
    """Maps a window to raw per-identity scores.

    ``identities`` gives class-index order when the backend knows it (model
    sidecars and fixture tables carry it). ``key`` is the optional fixture
    key (image ref, window ordinal) threaded through by the pipeline.
    """

    input_side: int
    num_classes: int
    identities: tuple[str, ...] | None = None
    concurrent_safe: bool = True

    @abstractmethod
    def scores_for(self, window: Window, key: tuple[str, int] | None = None):
        ...


def classify(window: Window, backend: ClassifierBackend, key: tuple[str, int] | None = None) -> ScoreVector:
    """Classify one window, enforcing side and score-vector contracts."""
    if window.input_side != backend.input_side:
        raise BackendError(
            f"window side {window.input_side} does not match backend input side {backend.input_side}"
        )
    raw = list(backend.scores_for(window, key))
    if len(raw) != backend.num_classes:
        raise BackendError(f"backend returned {len(raw)} scores, expected {backend.num_classes}")
    return ScoreVector.from_raw(raw)


def classify_batch(
    windows,
    backend: ClassifierBackend,
    keys: list[tuple[str, int] | None] | None = None,
) -> list[ScoreVector]:
    """Elementwise classify; errors name the offending window index."""
    if keys is not None and len(keys) != len(windows):
        raise BackendError(f"{len(keys)} keys for {len(windows)} windows")
    out = []
    for i, window in enumerate(windows):
        try:
            out.append(classify(window, backend, keys[i] if keys else None))
        except BackendError as exc:
            raise BackendError(f"window {i}: {exc}") from exc
    return out


class MockClassifierBackend(ClassifierBackend):
    """Scripted backend: a table from window fingerprint to score vector.

    Lookups try the fixture key (image ref, window ordinal) first, then the
    SHA-256 of the pixel buffer. Unknown windows are contract errors, never
    fabricated scores.
    """

    concurrent_safe = True

    def __init__(
        self,
        num_classes: int,
        input_side: int,
        by_key: dict[tuple[str, int], tuple[float, ...]] | None = None,
        by_sha: dict[str, tuple[float, ...]] | None = None,
        identities: tuple[str, ...] | None = None,
    ):
        self.num_classes = num_classes
        self.input_side = input_side
        self.by_key = dict(by_key or {})
        self.by_sha = dict(by_sha or {})
        self.identities = identities

    def scores_for(self, window: Window, key: tuple[str, int] | None = None):
        if key is not None and tuple(key) in self.by_key:
            return self.by_key[tuple(key)]
        sha = pixel_sha256(window.pixels)
        if sha in self.by_sha:
            return self.by_sha[sha]
        raise BackendError(f"no scripted scores for key={key} sha={sha[:12]}…")

    @classmethod
    def from_csv(cls, path: str | Path, input_side: int) -> MockClassifierBackend:
        """Load a score table CSV; identity columns after the fixed three give
        the class order."""
        p = Path(path)
        if not p.is_file():
            raise FixtureError(f"score table not found: {p}")
        with p.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(header[:3]) != SCORE_TABLE_FIXED_COLUMNS:
                raise FixtureError(
                    f"score table {p} must start with columns {SCORE_TABLE_FIXED_COLUMNS}"
                )
            identities = tuple(name.strip() for name in header[3:])
            if not identities:
                raise FixtureError(f"score table {p} has no identity columns")
            by_key: dict[tuple[str, int], tuple[float, ...]] = {}
            by_sha: dict[str, tuple[float, ...]] = {}
            for row in reader:
                if not row:
                    continue
                scores = tuple(float(v) for v in row[3:])
                if len(scores) != len(identities):
                    raise FixtureError(f"score row for {row[0]} has {len(scores)} scores")
                by_key[(row[0], int(row[1]))] = scores
                if row[2]:
                    by_sha[row[2]] = scores
        return cls(
            num_classes=len(identities),
            input_side=input_side,
            by_key=by_key,
            by_sha=by_sha,
            identities=identities,
        )


def write_score_table(
    path: str | Path,
    identities: tuple[str, ...],
    rows: list[tuple[str, int, str, tuple[float, ...]]],
) -> None:
    """Write a scripted-score CSV; rows are (ref, ordinal, pixel_sha, scores)."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(SCORE_TABLE_FIXED_COLUMNS) + list(identities))
        for ref, ordinal, sha, scores in rows:
            writer.writerow([ref, ordinal, sha] + [repr(s) for s in scores])


def scale_pixels(pixels: np.ndarray, mode: str) -> np.ndarray:
    """Apply the declared input scaling to a uint8 RGB buffer."""
    x = pixels.astype(np.float32)
    if mode == "inception":
        return x / 127.5 - 1.0
    if mode == "unit":
        return x / 255.0
    if mode == "none":
        return x
    raise BackendError(f"unknown scaling mode {mode!r}; expected one of {SCALING_MODES}")


@dataclass(frozen=True)
class ClassifierMetadata:
    """Sidecar contents: how to feed the model and what its classes mean."""

    input_layout: str  # "nchw" | "nhwc"
    input_side: int
    scaling: str
    identities: tuple[str, ...]

    @classmethod
    def load(cls, path: str | Path) -> ClassifierMetadata:
        p = Path(path)
        if not p.is_file():
            raise BackendError(f"classifier metadata sidecar not found: {p}")
        data = json.loads(p.read_text(encoding="utf-8"))
        if data.get("schema") != CLASSIFIER_METADATA_SCHEMA:
            raise BackendError(f"unexpected metadata schema {data.get('schema')!r} in {p}")
        meta = cls(
            input_layout=data["input_layout"],
            input_side=int(data["input_side"]),
            scaling=data["scaling"],
            identities=tuple(data["identities"]),
        )
        if meta.input_layout not in ("nchw", "nhwc"):
            raise BackendError(f"bad input_layout {meta.input_layout!r} in {p}")
        if meta.scaling not in SCALING_MODES:
            raise BackendError(f"bad scaling {meta.scaling!r} in {p}")
        if not meta.identities:
            raise BackendError(f"metadata {p} lists no identities")
        return meta


def metadata_path_for(model_path: str | Path) -> Path:
    return Path(model_path).with_suffix(".json")


class OnnxClassifierBackend(ClassifierBackend):
    """ONNX classifier plus its JSON sidecar.

    The model takes one image tensor (layout per sidecar) and yields a
    length-K probability vector; the sidecar binds class indices to identity
    IDs and declares the input scaling convention.
    """

    concurrent_safe = True

    def __init__(self, model_path: str | Path, metadata_path: str | Path | None = None):
        from .onnxlite import GraphExecutor, load_model

        p = Path(model_path)
        if not p.is_file():
            raise BackendError(f"classifier model not found: {p}")
        self.metadata = ClassifierMetadata.load(
            metadata_path if metadata_path is not None else metadata_path_for(p)
        )
        try:
            self.model = load_model(p)
            self.executor = GraphExecutor(self.model)
        except Exception as exc:
            raise BackendError(f"cannot load classifier model {p}: {exc}") from exc
        if len(self.model.inputs) != 1:
            raise BackendError(f"classifier model must have one input, has {len(self.model.inputs)}")
        self.input_side = self.metadata.input_side
        self.identities = self.metadata.identities
        self.num_classes = len(self.identities)
        out_shape = self.model.outputs[0].shape if self.model.outputs else ()
        if out_shape and out_shape[-1] not in (None, self.num_classes):
            raise BackendError(
                f"model output width {out_shape[-1]} != {self.num_classes} identities in sidecar"
            )

    def scores_for(self, window: Window, key: tuple[str, int] | None = None):
        x = scale_pixels(window.pixels, self.metadata.scaling)
        if self.metadata.input_layout == "nchw":
            x = x.transpose(2, 0, 1)
        batch = x[np.newaxis]
        result = self.executor.run({self.model.inputs[0].name: batch})
        return np.asarray(result[self.model.outputs[0].name]).reshape(-1).tolist()
