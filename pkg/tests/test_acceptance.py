"""Acceptance gate: one test per release criterion, each printing a PASS or
FAIL line (run with ``pytest -s tests/test_acceptance.py`` to see them).

Everything here runs with scripted backends only: no trained model, no
training component.
"""

from __future__ import annotations

import time
from contextlib import contextmanager

import numpy as np

from oracles import check_window_geometry, oracle_vote
from petident import ScoreVector, make_folds, read_report, vote
from petident.augmentation import IDENTITY_SPEC, AugmentationSpec, LabeledWindow, expand_dataset
from petident.cli import EXIT_OK, main
from petident.detection import BoundingBox
from petident.windowing import window_regions


@contextmanager
def criterion(name: str):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL ({time.perf_counter() - started:.2f}s)")
        raise
    print(f"[ACCEPTANCE] {name}: PASS ({time.perf_counter() - started:.2f}s)")


def random_score_vector(rng, k) -> ScoreVector:
    raw = rng.random(k) + 1e-9
    return ScoreVector(tuple(raw / raw.sum()))


def test_voting_oracle_equivalence():
    """vote() matches the brute-force enumeration oracle on 10,000 random
    triples for K in {2, 3, 4}, in under 10 seconds."""
    with criterion("voting-oracle-equivalence (10,000 triples, <10s)"):
        rng = np.random.default_rng(20260810)
        started = time.perf_counter()
        disagreements = 0
        trials_per_k = (3334, 3333, 3333)
        for k, trials in zip((2, 3, 4), trials_per_k):
            for _ in range(trials):
                triple = [random_score_vector(rng, k) for _ in range(3)]
                got = vote(triple)
                winner, rule, confidence = oracle_vote([vec.scores for vec in triple])
                if (
                    got.class_index != winner
                    or got.decision_rule != rule
                    or abs(got.confidence - confidence) > 1e-12
                ):
                    disagreements += 1
        elapsed = time.perf_counter() - started
        assert disagreements == 0
        assert elapsed < 10.0, f"voting check took {elapsed:.2f}s"


def _perturb_non_argmax(rng, vec: ScoreVector) -> ScoreVector:
    scores = np.array(vec.scores)
    top = int(np.argmax(scores))
    rest = 1.0 - scores[top]
    k = len(scores)
    shares = rng.random(k - 1) + 1e-9
    shares = shares / shares.sum() * rest
    while k > 1 and shares.size and shares.max() >= scores[top]:
        shares = 0.5 * shares + 0.5 * (rest / (k - 1))
    return ScoreVector(tuple(np.insert(shares, top, scores[top])))


def test_majority_dominance():
    """For 1,000 triples with a majority argmax, argmax-preserving
    perturbation of every non-argmax score never changes the vote."""
    with criterion("majority-dominance (1,000 perturbed triples)"):
        rng = np.random.default_rng(99)
        violations = 0
        trials = 0
        while trials < 1000:
            k = int(rng.integers(2, 5))
            triple = [random_score_vector(rng, k) for _ in range(3)]
            labels = [vec.argmax() for vec in triple]
            if len(set(labels)) == 3:
                continue
            trials += 1
            baseline = vote(triple).class_index
            perturbed = [_perturb_non_argmax(rng, vec) for vec in triple]
            if [vec.argmax() for vec in perturbed] != labels:
                violations += 1
                continue
            if vote(perturbed).class_index != baseline:
                violations += 1
        assert violations == 0


def test_window_geometry():
    """1,000 random boxes (squares included, aspect ratios up to 10): squares
    of side min(w,h), containment, symmetric offsets within 1px, coverage for
    aspect <= 3, pairwise overlap for aspect below 3 (with integer offsets,
    the pair at L = 3S - 1 can only touch; the oracle encodes that boundary)."""
    with criterion("window-geometry (1,000 boxes)"):
        rng = np.random.default_rng(7)
        violations: list[str] = []
        for trial in range(1000):
            if trial % 10 == 0:
                w = h = int(rng.integers(1, 300))  # explicit squares
            else:
                w = int(rng.integers(1, 300))
                aspect = float(rng.uniform(1.0, 10.0))
                h = max(1, int(round(w * aspect))) if rng.random() < 0.5 else w
                if h == w and rng.random() < 0.5:
                    w = max(1, int(round(h * aspect)))
            box = BoundingBox(int(rng.integers(0, 100)), int(rng.integers(0, 100)), w, h)
            violations.extend(check_window_geometry(box, window_regions(box)))
        assert violations == [], violations[:5]


def test_augmentation_contract(tmp_path):
    """16x expansion is exact; the identity spec is a byte-identity; the
    flip-only spec is an involution; fixed seeds rerun byte-identically."""
    with criterion("augmentation (16x, identity, involution, determinism)"):
        rng = np.random.default_rng(5)
        from petident.windowing import Window

        items = [
            LabeledWindow(
                window=Window(
                    region=BoundingBox(0, 0, 48, 48),
                    pixels=rng.integers(0, 256, (48, 48, 3), dtype=np.uint8),
                ),
                identity=f"id{i % 3}",
            )
            for i in range(10)
        ]
        spec = AugmentationSpec(seed=123)

        expanded = expand_dataset(items, spec, factor=16)
        assert len(expanded) == 16 * len(items)
        for i, item in enumerate(items):
            assert expanded[i * 16].identity == item.identity
            assert np.array_equal(expanded[i * 16].window.pixels, item.window.pixels)
        assert all(out.identity == items[i // 16].identity for i, out in enumerate(expanded))

        from petident.augmentation import augment_window

        for item in items[:3]:
            same = augment_window(item.window, IDENTITY_SPEC, draw_index=4)
            assert np.array_equal(same.pixels, item.window.pixels)

        flip_only = AugmentationSpec(
            flip_probability=1.0, shift_fraction=0.0, shear_degrees=0.0, zoom_range=(1.0, 1.0)
        )
        for item in items[:3]:
            once = augment_window(item.window, flip_only, draw_index=0)
            assert np.array_equal(once.pixels, item.window.pixels[:, ::-1])
            twice = augment_window(once, flip_only, draw_index=0)
            assert np.array_equal(twice.pixels, item.window.pixels)

        rerun = expand_dataset(items, spec, factor=16)
        assert all(
            np.array_equal(a.window.pixels, b.window.pixels) for a, b in zip(expanded, rerun)
        )


def test_fold_contract(paper_scale_fixture):
    """On the 16x5 manifest with k=10: disjoint, exhaustive, per-identity
    counts within 1, and reproducible across runs."""
    with criterion("stratified-folds (16x5 manifest, k=10)"):
        manifest = paper_scale_fixture.manifest
        folds = make_folds(manifest, 10, seed=2024)
        assert len(folds.fold_of) == 80
        assert all(0 <= f < 10 for f in folds.fold_of)
        assert sum(folds.fold_sizes()) == 80  # disjoint + exhaustive by construction

        for identity in manifest.identities:
            per_fold = [0] * 10
            for i, entry in enumerate(manifest.entries):
                if entry.identity == identity:
                    per_fold[folds.fold_of[i]] += 1
            nonzero = [c for c in per_fold]
            assert max(nonzero) - min(nonzero) <= 1
            assert sum(per_fold) == 5

        assert make_folds(manifest, 10, seed=2024) == folds


def test_end_to_end_scripted_pipeline(paper_scale_fixture, partial_accuracy_fixture, tmp_path):
    """cmd_evaluate over the scripted 16x5 fixture reports exactly 1.000 mean
    accuracy; the 0.75-fraction fixture reports the scripted fraction within
    one-image granularity; total runtime under 60 seconds."""
    with criterion("end-to-end-scripted (perfect=1.000, partial=0.75, <60s)"):
        started = time.perf_counter()

        fs = paper_scale_fixture
        report_path = tmp_path / "report_perfect.json"
        code = main(
            [
                "evaluate",
                str(fs.manifest_path),
                "--k",
                "10",
                "--seed",
                "11",
                "--out",
                str(report_path),
                "--detector-fixtures",
                str(fs.detections_path),
                "--classifier-fixtures",
                str(fs.scores_path),
                "--input-side",
                str(fs.input_side),
            ]
        )
        assert code == EXIT_OK
        report = read_report(report_path)
        assert report.mean_accuracy == 1.0
        assert report.overall_accuracy == 1.0
        assert report.per_fold_accuracy == (1.0,) * len(report.per_fold_accuracy)

        partial = partial_accuracy_fixture
        scripted_fraction = partial.scripted_correct_count() / len(partial.manifest.entries)
        partial_report_path = tmp_path / "report_partial.json"
        code = main(
            [
                "evaluate",
                str(partial.manifest_path),
                "--k",
                "10",
                "--seed",
                "11",
                "--out",
                str(partial_report_path),
                "--detector-fixtures",
                str(partial.detections_path),
                "--classifier-fixtures",
                str(partial.scores_path),
                "--input-side",
                str(partial.input_side),
            ]
        )
        assert code == EXIT_OK
        partial_report = read_report(partial_report_path)
        one_image = 1.0 / len(partial.manifest.entries)
        assert abs(partial_report.overall_accuracy - scripted_fraction) < 1e-12
        assert abs(partial_report.overall_accuracy - 0.75) <= one_image

        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"end-to-end run took {elapsed:.2f}s"
