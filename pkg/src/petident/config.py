"""Pipeline configuration: file loading, flag overrides, validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .augmentation import DEFAULT_EXPANSION_FACTOR, AugmentationSpec
from .errors import ConfigError
from .identification import VOTING_MAX_SINGLE, VOTING_SUM_SCORES


@dataclass(frozen=True)
class PipelineConfig:
    """Single configuration surface for every CLI command.

    Backends come either from model files (``*_model_path``) or scripted
    fixture tables (``*_fixtures``); fixture tables take precedence when both
    are set. ``seed`` drives fold assignment; augmentation draws use the seed
    inside ``augmentation``.
    """

    detector_model_path: str | None = None
    classifier_model_path: str | None = None
    label_map_path: str | None = None
    detector_fixtures: str | None = None
    classifier_fixtures: str | None = None
    min_confidence: float = 0.5
    input_side: int = 299
    augmentation: AugmentationSpec = field(default_factory=AugmentationSpec)
    augment_factor: int = DEFAULT_EXPANSION_FACTOR
    cv_k: int = 10
    seed: int = 0
    voting_variant: str = VOTING_MAX_SINGLE
    dog_label: str = "dog"

    def __post_init__(self):
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ConfigError(f"min_confidence must be in [0,1], got {self.min_confidence}")
        if self.input_side < 1:
            raise ConfigError(f"input_side must be positive, got {self.input_side}")
        if self.augment_factor < 1:
            raise ConfigError(f"augment_factor must be at least 1, got {self.augment_factor}")
        if self.cv_k < 2:
            raise ConfigError(f"cv_k must be at least 2, got {self.cv_k}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.voting_variant not in (VOTING_MAX_SINGLE, VOTING_SUM_SCORES):
            raise ConfigError(f"voting_variant must be max_single or sum_scores, got {self.voting_variant!r}")
        if not self.dog_label:
            raise ConfigError("dog_label must be non-empty")

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["augmentation"] = self.augmentation.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "augmentation" in kwargs and not isinstance(kwargs["augmentation"], AugmentationSpec):
            try:
                kwargs["augmentation"] = AugmentationSpec.from_dict(kwargs["augmentation"])
            except Exception as exc:
                raise ConfigError(f"bad augmentation config: {exc}") from exc
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> PipelineConfig:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {p} must contain a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **overrides) -> PipelineConfig:
        """Apply non-None flag values on top of this config; flags win.

        A ``seed`` override also reseeds the augmentation spec so one flag
        makes a whole command reproducible.
        """
        updates = {k: v for k, v in overrides.items() if v is not None}
        if not updates:
            return self
        if "seed" in updates and "augmentation" not in updates:
            updates["augmentation"] = dataclasses.replace(self.augmentation, seed=updates["seed"])
        try:
            return dataclasses.replace(self, **updates)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
