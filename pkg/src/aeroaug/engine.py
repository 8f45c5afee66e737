"""The augmentation loop: sample, mask, generate, score, accept, composite.

Images are visited in a seed-shuffled round-robin. Each visit draws one
candidate patch; a hole that overlaps an existing instance is discarded
before generation, anything else is generated, scored against the
acceptance threshold (strictly greater wins) and, if accepted, composited
back with a synthetic annotation over the hole rectangle. The loop stops
at the target count or when the attempt budget runs out, in which case
the partial result is returned with ``budget_exhausted`` set - never an
exception.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .dataset import Annotation, Dataset, ImageRecord, Provenance
from .errors import EmptyDataset, ImageTooSmall, IoFailure
from .backends.base import DetectorBackend, GeneratorBackend, score_generated
from .patches import (composite_hole, extract_patch, harvest_instance_patch,
                      hole_rect_global, intersects_any, mask_center,
                      sample_patch_origin, synthetic_annotation)

# keep the loop finite even if every sampled hole keeps colliding
VISIT_CAP_FACTOR = 50
# a long unbroken run of hole collisions means the images are saturated;
# healthy runs see collision streaks orders of magnitude shorter
MIN_COLLISION_STREAK = 200
COLLISION_STREAK_PER_IMAGE = 25


@dataclass(frozen=True)
class AugmentationConfig:
    target_new_instances: int
    patch_size: int = 96
    acceptance_threshold: float = 0.4
    instances_per_image: int = 1
    max_attempts_per_instance: int = 100
    seed: int = 0
    label: str = "car"
    collide_with_synthetic: bool = True  # treat accepted instances as obstacles

    def __post_init__(self):
        if self.target_new_instances <= 0:
            raise ValueError("target_new_instances must be positive")
        if self.patch_size <= 0 or self.patch_size % 2 != 0:
            raise ValueError(f"patch_size must be a positive even integer, "
                             f"got {self.patch_size}")
        if not (0.0 <= self.acceptance_threshold <= 1.0):
            raise ValueError(f"acceptance_threshold "
                             f"{self.acceptance_threshold} outside [0,1]")
        if self.instances_per_image <= 0:
            raise ValueError("instances_per_image must be positive")
        if self.max_attempts_per_instance <= 0:
            raise ValueError("max_attempts_per_instance must be positive")

    @property
    def attempt_budget(self) -> int:
        return self.max_attempts_per_instance * self.target_new_instances


@dataclass(frozen=True)
class AugmentationStats:
    attempts: int
    accepted: int
    rejected_intersection: int
    rejected_confidence: int
    seconds: float
    budget_exhausted: bool

    def __post_init__(self):
        if self.accepted + self.rejected_confidence != self.attempts:
            raise ValueError("accepted + rejected_confidence must equal attempts")


@dataclass(frozen=True)
class AcceptedInstance:
    image_id: str
    bbox: tuple[float, float, float, float]
    score: float
    seed: int


def augment_dataset(train_set: Dataset, generator: GeneratorBackend,
                    detector: DetectorBackend, config: AugmentationConfig,
                    ) -> tuple[Dataset, AugmentationStats, list[AcceptedInstance]]:
    """Run the loop; returns (augmented dataset, stats, accepted instances).

    The input dataset is never mutated. Deterministic for a fixed config
    seed and deterministic backends.
    """
    for rec in train_set.records:
        if rec.width < config.patch_size or rec.height < config.patch_size:
            raise ImageTooSmall(
                f"{rec.id}: {rec.width}x{rec.height} smaller than patch "
                f"{config.patch_size}")
    if not train_set.records:
        raise EmptyDataset("cannot augment an empty dataset")

    rng = np.random.default_rng(config.seed)
    rotation = list(rng.permutation(len(train_set.records)))
    current: list[ImageRecord] = list(train_set.records)
    synth_count = [0] * len(current)

    attempts = 0
    accepted = 0
    rejected_intersection = 0
    rejected_confidence = 0
    accepted_instances: list[AcceptedInstance] = []
    visit_cap = VISIT_CAP_FACTOR * config.attempt_budget
    streak_cap = max(MIN_COLLISION_STREAK,
                     COLLISION_STREAK_PER_IMAGE * len(rotation))
    visits = 0
    collision_streak = 0
    cursor = 0
    started = time.perf_counter()

    while accepted < config.target_new_instances:
        if (attempts >= config.attempt_budget or visits >= visit_cap or
                collision_streak >= streak_cap or not rotation):
            break
        if cursor >= len(rotation):
            cursor = 0
        idx = rotation[cursor]
        visits += 1

        rec = current[idx]
        origin = sample_patch_origin(rec, config.patch_size, rng)
        masked = mask_center(extract_patch(rec, origin, config.patch_size))
        hole = hole_rect_global(masked)
        obstacles = rec.annotations if config.collide_with_synthetic else \
            [a for a in rec.annotations if a.provenance is Provenance.ORIGINAL]
        if intersects_any(hole, obstacles):
            rejected_intersection += 1
            collision_streak += 1
            cursor += 1
            continue
        collision_streak = 0

        result = generator.fill(masked)
        attempts += 1
        score = score_generated(detector, result, masked)
        if score > config.acceptance_threshold:
            new_rec = composite_hole(rec, masked, result)
            ann = synthetic_annotation(masked, config.label)
            current[idx] = new_rec.with_annotations(
                list(new_rec.annotations) + [ann])
            synth_count[idx] += 1
            accepted += 1
            accepted_instances.append(AcceptedInstance(
                rec.id, (hole.x_min, hole.y_min, hole.x_max, hole.y_max),
                score, config.seed))
            if synth_count[idx] >= config.instances_per_image:
                rotation.pop(cursor)
                continue  # cursor now points at the next image already
        else:
            rejected_confidence += 1
        cursor += 1

    stats = AugmentationStats(
        attempts=attempts,
        accepted=accepted,
        rejected_intersection=rejected_intersection,
        rejected_confidence=rejected_confidence,
        seconds=time.perf_counter() - started,
        budget_exhausted=accepted < config.target_new_instances,
    )
    augmented = Dataset(tuple(current),
                        train_set.label_set | frozenset([config.label]))
    return augmented, stats, accepted_instances


def write_run_manifest(path, config: AugmentationConfig,
                       stats: AugmentationStats,
                       accepted: list[AcceptedInstance]) -> None:
    """JSON audit record of a run: config echo, stats, accepted instances."""
    payload = {
        "config": asdict(config),
        "stats": asdict(stats),
        "accepted": [asdict(a) for a in accepted],
    }
    try:
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(str(path), str(exc)) from None


def export_training_patches(train_set: Dataset, patch_size: int,
                            out_path) -> dict:
    """Write one PNG + one annotation file per instance patch.

    The patch annotation carries the instance in patch-local coordinates
    so external generator/detector training consumes the same corpus.
    Returns the manifest, which is also written as ``manifest.json``.
    """
    from PIL import Image

    out = Path(out_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(out), str(exc)) from None

    entries = []
    for rec in train_set.records:
        for k, ann in enumerate(rec.annotations):
            patch = harvest_instance_patch(rec, ann, patch_size)
            stem = f"{rec.id}_{k:03d}"
            local = patch.instance
            b = local.bbox
            line = (f"{local.label} {b.x_min!r} {b.y_min!r} {b.x_max!r} "
                    f"{b.y_max!r} {local.provenance.value}\n")
            try:
                Image.fromarray(patch.pixels).save(out / f"{stem}.png")
                (out / f"{stem}.txt").write_text(line)
            except OSError as exc:
                raise IoFailure(str(out / stem), str(exc)) from None
            entries.append({
                "image": f"{stem}.png",
                "annotations": f"{stem}.txt",
                "source_id": rec.id,
                "instance_index": k,
                "origin": list(patch.origin),
            })
    manifest = {"patch_size": patch_size, "count": len(entries),
                "entries": entries}
    try:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(str(out / "manifest.json"), str(exc)) from None
    return manifest


def acceptance_rate_probe(generator: GeneratorBackend,
                          detector: DetectorBackend, n_samples: int,
                          backgrounds: Dataset, seed: int = 0,
                          patch_size: int = 96) -> np.ndarray:
    """Score ``n_samples`` unfiltered candidates; histogram over ten bins.

    Bin k covers [k/10, (k+1)/10), with 1.0 folded into the last bin.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    records = [r for r in backgrounds.records
               if r.width >= patch_size and r.height >= patch_size]
    if not records:
        raise EmptyDataset(f"no backgrounds of at least {patch_size} px")
    bins = np.zeros(10, dtype=np.int64)
    collected = 0
    tries = 0
    while collected < n_samples:
        tries += 1
        if tries > 100 * n_samples:
            raise EmptyDataset("could not sample enough hole candidates")
        rec = records[int(rng.integers(len(records)))]
        origin = sample_patch_origin(rec, patch_size, rng)
        masked = mask_center(extract_patch(rec, origin, patch_size))
        if intersects_any(hole_rect_global(masked), rec.annotations):
            continue
        score = score_generated(detector, generator.fill(masked), masked)
        bins[min(int(score * 10.0), 9)] += 1
        collected += 1
    return bins
