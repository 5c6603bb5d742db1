"""Exception types shared across the pipeline."""

from __future__ import annotations


class PetIdentError(Exception):
    """Base class for all errors raised by this package."""


class ManifestError(PetIdentError):
    """Manifest file is missing, malformed, or violates a manifest rule."""


class ConfigError(PetIdentError):
    """Configuration file or flag value is invalid or unknown."""


class BackendError(PetIdentError):
    """A detector or classifier backend failed or broke its output contract."""


class StageError(PetIdentError):
    """A pipeline stage failed; carries the stage name for attribution."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class FixtureError(PetIdentError):
    """Fixture generation or fixture table loading failed."""
