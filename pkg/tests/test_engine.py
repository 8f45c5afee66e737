import json

import numpy as np
import pytest

from aeroaug.backends.base import DetectorBackend, GeneratorBackend
from aeroaug.backends.toy import ToyDetector, ToyGenerator, ToyGeneratorParams
from aeroaug.boxes import BBox
from aeroaug.dataset import Dataset, Provenance
from aeroaug.engine import (AugmentationConfig, acceptance_rate_probe,
                            augment_dataset, export_training_patches,
                            write_run_manifest)
from aeroaug.errors import ImageTooSmall
from aeroaug.metrics import Detection
from aeroaug.patches import GenerationResult
from aeroaug.toydata import make_toy_dataset

from conftest import blank_record


class ConstantDetector(DetectorBackend):
    """Always reports one detection on the patch center at a fixed score."""

    def __init__(self, confidence):
        self.confidence = confidence

    def detect(self, image):
        if self.confidence is None:
            return []
        s = image.shape[0]
        q = s // 4
        return [Detection(BBox(q, q, s - q, s - q), self.confidence)]


class MeanFillGenerator(GeneratorBackend):
    """Cheap deterministic fill: paints the hole with the ring mean."""

    deterministic = True

    def fill(self, masked):
        completed = masked.base.pixels.copy()
        ring_mean = completed[~masked.mask].reshape(-1, 3).mean(axis=0)
        ys, xs = masked.hole_slices
        completed[ys, xs] = ring_mean.astype(np.uint8)
        return GenerationResult.from_completed(completed)


def empty_dataset(n=6, size=160):
    return Dataset.from_records(
        [blank_record(f"bg{i}", size, size, value=70 + i) for i in range(n)])


class TestLoopAccounting:
    def test_threshold_zero_accepts_every_attempt(self):
        ds = empty_dataset(8, size=288)
        config = AugmentationConfig(target_new_instances=24, patch_size=96,
                                    acceptance_threshold=0.0,
                                    instances_per_image=3, seed=3)
        _, stats, _ = augment_dataset(ds, MeanFillGenerator(),
                                      ConstantDetector(0.5), config)
        assert stats.attempts == 24
        assert stats.accepted == 24
        assert stats.rejected_confidence == 0
        assert not stats.budget_exhausted

    def test_saturated_images_stop_quickly_with_partial_result(self):
        # 160px images fit very few non-overlapping holes; the loop must
        # bail out with what it got instead of spinning on collisions
        ds = empty_dataset(8, size=160)
        config = AugmentationConfig(target_new_instances=40, patch_size=96,
                                    acceptance_threshold=0.0,
                                    instances_per_image=8, seed=3)
        _, stats, _ = augment_dataset(ds, MeanFillGenerator(),
                                      ConstantDetector(0.5), config)
        assert stats.budget_exhausted
        assert 0 < stats.accepted < 40
        assert stats.rejected_intersection <= 201 * 8

    def test_never_detecting_exhausts_budget(self):
        ds = empty_dataset(4)
        config = AugmentationConfig(target_new_instances=5, patch_size=96,
                                    acceptance_threshold=0.5,
                                    max_attempts_per_instance=10, seed=1)
        _, stats, _ = augment_dataset(ds, MeanFillGenerator(),
                                      ConstantDetector(None), config)
        assert stats.budget_exhausted
        assert stats.accepted == 0
        assert stats.attempts == 50  # 10 per requested instance

    def test_strict_inequality_at_threshold(self):
        ds = empty_dataset(4)
        config = AugmentationConfig(target_new_instances=3, patch_size=96,
                                    acceptance_threshold=0.5,
                                    max_attempts_per_instance=2, seed=1)
        # score == threshold must NOT be accepted
        _, stats, _ = augment_dataset(ds, MeanFillGenerator(),
                                      ConstantDetector(0.5), config)
        assert stats.accepted == 0 and stats.budget_exhausted

    def test_accounting_identity(self, calibrated_pair_64, empty_backgrounds):
        gen_params, cal = calibrated_pair_64
        config = AugmentationConfig(target_new_instances=25, patch_size=64,
                                    acceptance_threshold=0.4,
                                    instances_per_image=4, seed=9)
        _, stats, _ = augment_dataset(empty_backgrounds,
                                      ToyGenerator(gen_params, seed=2),
                                      ToyDetector(cal), config)
        assert stats.accepted + stats.rejected_confidence == stats.attempts
        assert stats.accepted <= config.target_new_instances


class TestLoopInvariants:
    def run_once(self, seed, collide_with_synthetic=True):
        ds = make_toy_dataset(6, size=224, instances_per_image=(1, 2),
                              seed=31)
        config = AugmentationConfig(target_new_instances=10, patch_size=96,
                                    acceptance_threshold=0.3,
                                    instances_per_image=3, seed=seed,
                                    collide_with_synthetic=collide_with_synthetic)
        gen = ToyGenerator(ToyGeneratorParams(quality_range=(0.3, 1.0)),
                           seed=seed + 100)
        from aeroaug.backends.toy import (ToyDetectorParams,
                                          default_template_bank)
        det = ToyDetector(ToyDetectorParams(
            templates=default_template_bank(96), detection_threshold=-1.0))
        return ds, config, augment_dataset(ds, gen, det, config)

    def test_no_synthetic_box_overlaps_preexisting(self):
        for seed in range(5):
            ds, config, (augmented, stats, accepted) = self.run_once(seed)
            for rec_before, rec_after in zip(ds.records, augmented.records):
                synth = [a for a in rec_after.annotations
                         if a.provenance is Provenance.SYNTHETIC]
                for s in synth:
                    others = [a for a in rec_after.annotations if a is not s]
                    for other in others:
                        # no positive-area intersection with anything else
                        assert s.bbox.intersection_area(other.bbox) == 0.0

    def test_synthetic_count_matches_stats(self):
        ds, config, (augmented, stats, accepted) = self.run_once(2)
        synth_total = sum(
            1 for rec in augmented.records for a in rec.annotations
            if a.provenance is Provenance.SYNTHETIC)
        assert synth_total == stats.accepted == len(accepted)

    def test_pixels_outside_holes_unchanged(self):
        ds, config, (augmented, stats, accepted) = self.run_once(3)
        holes_by_image = {}
        for inst in accepted:
            holes_by_image.setdefault(inst.image_id, []).append(inst.bbox)
        for before, after in zip(ds.records, augmented.records):
            untouched = np.ones(before.pixels.shape[:2], dtype=bool)
            for x0, y0, x1, y1 in holes_by_image.get(before.id, []):
                untouched[int(y0):int(y1), int(x0):int(x1)] = False
            assert np.array_equal(before.pixels[untouched],
                                  after.pixels[untouched])

    def test_original_annotations_preserved(self):
        ds, config, (augmented, stats, _) = self.run_once(4)
        for before, after in zip(ds.records, augmented.records):
            originals = [a for a in after.annotations
                         if a.provenance is Provenance.ORIGINAL]
            assert originals == list(before.annotations)

    def test_per_image_cap(self):
        ds, config, (augmented, stats, _) = self.run_once(5)
        for rec in augmented.records:
            synth = sum(1 for a in rec.annotations
                        if a.provenance is Provenance.SYNTHETIC)
            assert synth <= config.instances_per_image

    def test_input_dataset_untouched(self):
        ds = make_toy_dataset(4, size=224, instances_per_image=(1, 1),
                              seed=8)
        snapshot = [rec.pixels.copy() for rec in ds.records]
        counts = [len(rec.annotations) for rec in ds.records]
        config = AugmentationConfig(target_new_instances=4, patch_size=96,
                                    acceptance_threshold=0.0, seed=0)
        augment_dataset(ds, MeanFillGenerator(), ConstantDetector(0.9),
                        config)
        for rec, pixels, count in zip(ds.records, snapshot, counts):
            assert np.array_equal(rec.pixels, pixels)
            assert len(rec.annotations) == count

    def test_deterministic_replay(self, calibrated_pair_64,
                                  empty_backgrounds):
        gen_params, cal = calibrated_pair_64
        config = AugmentationConfig(target_new_instances=12, patch_size=64,
                                    acceptance_threshold=0.4,
                                    instances_per_image=3, seed=77)
        runs = []
        for _ in range(2):
            aug, stats, accepted = augment_dataset(
                empty_backgrounds, ToyGenerator(gen_params, seed=5),
                ToyDetector(cal), config)
            runs.append((aug, stats, accepted))
        a, b = runs
        import dataclasses
        assert dataclasses.replace(a[1], seconds=0.0) == \
            dataclasses.replace(b[1], seconds=0.0)
        assert a[2] == b[2]
        for ra, rb in zip(a[0].records, b[0].records):
            assert np.array_equal(ra.pixels, rb.pixels)
            assert ra.annotations == rb.annotations

    def test_too_small_image_rejected_up_front(self):
        ds = Dataset.from_records([blank_record("tiny", 48, 48)])
        config = AugmentationConfig(target_new_instances=1, patch_size=96)
        with pytest.raises(ImageTooSmall):
            augment_dataset(ds, MeanFillGenerator(), ConstantDetector(0.9),
                            config)


class TestManifest:
    def test_manifest_roundtrip(self, tmp_path):
        ds = empty_dataset(4)
        config = AugmentationConfig(target_new_instances=5, patch_size=96,
                                    acceptance_threshold=0.0,
                                    instances_per_image=2, seed=11)
        _, stats, accepted = augment_dataset(ds, MeanFillGenerator(),
                                             ConstantDetector(0.9), config)
        path = tmp_path / "manifest.json"
        write_run_manifest(path, config, stats, accepted)
        payload = json.loads(path.read_text())
        assert payload["config"]["acceptance_threshold"] == 0.0
        assert payload["config"]["seed"] == 11
        assert payload["stats"]["accepted"] == 5
        assert len(payload["accepted"]) == 5
        entry = payload["accepted"][0]
        assert set(entry) == {"image_id", "bbox", "score", "seed"}


class TestExportPatches:
    def test_490_instances_export(self, tmp_path):
        records = []
        for i in range(500):
            boxes = [(40.0, 40.0, 60.0, 60.0)] if i < 490 else []
            records.append(blank_record(f"r{i:03d}", 128, 128, boxes))
        ds = Dataset.from_records(records)
        manifest = export_training_patches(ds, 96, tmp_path)
        assert manifest["count"] == 490
        assert len(list(tmp_path.glob("*.png"))) == 490
        assert len(list(tmp_path.glob("*.txt"))) == 490
        assert (tmp_path / "manifest.json").is_file()

    def test_empty_training_set(self, tmp_path):
        ds = Dataset.from_records([blank_record("r", 128, 128)])
        manifest = export_training_patches(ds, 96, tmp_path)
        assert manifest["count"] == 0 and manifest["entries"] == []

    def test_exported_annotations_inside_patch(self, tmp_path, toy_world):
        from aeroaug.dataset import load_dataset, filter_oversized
        ds, _ = filter_oversized(toy_world, 48)
        export_training_patches(ds, 96, tmp_path)
        reloaded = load_dataset(tmp_path, "vedai")
        assert len(reloaded) == ds.annotation_count
        for rec in reloaded.records:
            assert len(rec.annotations) == 1
            assert rec.annotations[0].bbox.inside_image(96, 96)


class TestProbe:
    def test_constant_score_lands_in_one_bin(self):
        ds = empty_dataset(4)
        bins = acceptance_rate_probe(MeanFillGenerator(),
                                     ConstantDetector(0.3), 200, ds, seed=0,
                                     patch_size=96)
        assert bins[3] == 200
        assert bins.sum() == 200

    def test_bins_sum_to_samples(self, calibrated_pair_64,
                                 empty_backgrounds):
        gen_params, cal = calibrated_pair_64
        bins = acceptance_rate_probe(ToyGenerator(gen_params, seed=1),
                                     ToyDetector(cal), 400,
                                     empty_backgrounds, seed=2,
                                     patch_size=64)
        assert bins.sum() == 400
