"""Labeled image manifests, the identity registry, and stratified k-fold splits."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

MANIFEST_HEADER = ("image_path", "identity_id")
DEFAULT_MIN_IMAGES = 5


@dataclass(frozen=True)
class LabeledImage:
    """One manifest row: an image path (as written in the file) and its dog ID."""

    image_path: str
    identity: str


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered image entries plus the identity registry.

    The registry maps each identity to a contiguous class index 0..K-1,
    assigned in first-appearance order. ``root`` is the directory relative
    image paths are resolved against (the manifest file's directory).
    """

    entries: tuple[LabeledImage, ...]
    identities: dict[str, int]
    root: Path = field(default_factory=lambda: Path("."))

    def __post_init__(self):
        indices = sorted(self.identities.values())
        if indices != list(range(len(self.identities))):
            raise ManifestError("registry indices must be contiguous from 0")
        for entry in self.entries:
            if entry.identity not in self.identities:
                raise ManifestError(f"entry identity {entry.identity!r} missing from registry")

    @property
    def num_identities(self) -> int:
        return len(self.identities)

    def identity_order(self) -> tuple[str, ...]:
        """Identity names sorted by class index."""
        return tuple(sorted(self.identities, key=self.identities.get))

    def class_index(self, identity: str) -> int:
        return self.identities[identity]

    def resolve_path(self, entry: LabeledImage) -> Path:
        p = Path(entry.image_path)
        return p if p.is_absolute() else self.root / p


def build_manifest(rows: list[tuple[str, str]], root: str | Path = ".") -> DatasetManifest:
    """Build a manifest from (image_path, identity) pairs, in order.

    Raises on empty input, empty fields, and duplicate pairs; duplicate errors
    name the offending 1-based data row.
    """
    if not rows:
        raise ManifestError("empty manifest")
    entries: list[LabeledImage] = []
    identities: dict[str, int] = {}
    seen: set[tuple[str, str]] = set()
    for rownum, (image_path, identity) in enumerate(rows, start=1):
        if not image_path or not identity:
            raise ManifestError(f"malformed row {rownum}: empty image_path or identity_id")
        pair = (image_path, identity)
        if pair in seen:
            raise ManifestError(f"duplicate row {rownum}: ({image_path}, {identity}) already listed")
        seen.add(pair)
        if identity not in identities:
            identities[identity] = len(identities)
        entries.append(LabeledImage(image_path=image_path, identity=identity))
    return DatasetManifest(entries=tuple(entries), identities=identities, root=Path(root))


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a manifest CSV (header ``image_path,identity_id``; optional
    ``split`` column is ignored)."""
    p = Path(path)
    if not p.is_file():
        raise ManifestError(f"manifest not found: {p}")
    with p.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError("empty manifest") from None
        header = [h.strip() for h in header]
        if tuple(header[:2]) != MANIFEST_HEADER:
            raise ManifestError(
                f"bad manifest header {header!r}; expected columns {MANIFEST_HEADER}"
            )
        rows: list[tuple[str, str]] = []
        for rownum, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ManifestError(f"malformed row {rownum}: expected at least 2 columns, got {len(row)}")
            rows.append((row[0].strip(), row[1].strip()))
    return build_manifest(rows, root=p.parent)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write a manifest CSV in the documented format."""
    p = Path(path)
    with p.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(MANIFEST_HEADER)
        for entry in manifest.entries:
            writer.writerow([entry.image_path, entry.identity])


@dataclass(frozen=True)
class ValidationReport:
    """Per-identity deficiency report for a minimum-image rule."""

    min_images: int
    deficiencies: dict[str, int]  # identity -> actual count, for counts < min_images

    @property
    def valid(self) -> bool:
        return not self.deficiencies

    def to_dict(self) -> dict:
        return {
            "min_images": self.min_images,
            "valid": self.valid,
            "deficiencies": dict(self.deficiencies),
        }


def validate_manifest(manifest: DatasetManifest, min_images: int = DEFAULT_MIN_IMAGES) -> ValidationReport:
    """Report every identity with fewer than ``min_images`` entries."""
    if min_images < 1:
        raise ManifestError(f"min_images must be positive, got {min_images}")
    counts: dict[str, int] = {identity: 0 for identity in manifest.identities}
    for entry in manifest.entries:
        counts[entry.identity] += 1
    deficiencies = {ident: n for ident, n in counts.items() if n < min_images}
    return ValidationReport(min_images=min_images, deficiencies=deficiencies)


# --- stratified folds ------------------------------------------------------
#
# Fold assignment must reproduce bit-for-bit across platforms and language
# runtimes, so the shuffle is driven by SplitMix64 (Steele et al., a fixed
# published PRNG) seeded from SHA-256 digests, not by any library generator.


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return (z ^ (z >> 31)), state


def _digest64(*parts: bytes) -> int:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return int.from_bytes(h.digest()[:8], "big")


def _identity_hash(identity: str) -> int:
    return _digest64(identity.encode("utf-8"))


def _shuffled(indices: list[int], seed64: int) -> list[int]:
    """Fisher-Yates shuffle driven by SplitMix64; j = draw mod (i+1)."""
    out = list(indices)
    state = seed64
    for i in range(len(out) - 1, 0, -1):
        draw, state = _splitmix64(state)
        j = draw % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


@dataclass(frozen=True)
class FoldAssignment:
    """Entry-index -> fold-index map for a stratified k-fold partition."""

    k: int
    fold_of: tuple[int, ...]  # aligned with manifest.entries
    seed: int

    def fold_sizes(self) -> list[int]:
        sizes = [0] * self.k
        for f in self.fold_of:
            sizes[f] += 1
        return sizes

    def held_out(self, fold: int) -> list[int]:
        """Entry indices evaluated in (held out of training for) ``fold``."""
        return [i for i, f in enumerate(self.fold_of) if f == fold]

    def training(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.fold_of) if f != fold]

    def to_dict(self) -> dict:
        return {"k": self.k, "seed": self.seed, "fold_of": list(self.fold_of)}


def make_folds(manifest: DatasetManifest, k: int, seed: int) -> FoldAssignment:
    """Stratified k-fold assignment.

    Within each identity, entry indices are shuffled with a generator seeded
    from (seed, identity) and dealt round-robin to folds starting at
    SHA-256(identity) mod k. Identical inputs always produce identical
    assignments, across runs and platforms.
    """
    n = len(manifest.entries)
    if k < 2:
        raise ManifestError(f"fold count must be at least 2, got {k}")
    if k > n:
        raise ManifestError(f"fold count {k} exceeds entry count {n}")
    if not 0 <= seed < 2**64:
        raise ManifestError("seed must be an unsigned 64-bit integer")

    by_identity: dict[str, list[int]] = {}
    for idx, entry in enumerate(manifest.entries):
        by_identity.setdefault(entry.identity, []).append(idx)

    fold_of = [0] * n
    seed_bytes = seed.to_bytes(8, "big")
    for identity, indices in by_identity.items():
        shuffle_seed = _digest64(seed_bytes, identity.encode("utf-8"))
        start = _identity_hash(identity) % k
        for pos, entry_idx in enumerate(_shuffled(indices, shuffle_seed)):
            fold_of[entry_idx] = (start + pos) % k
    return FoldAssignment(k=k, fold_of=tuple(fold_of), seed=seed)
