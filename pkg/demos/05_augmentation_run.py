"""One full augmentation run: sample, generate, score, accept, composite.

Saves before/after images and the run manifest to demos/out/05/.
"""
from pathlib import Path

import numpy as np
from PIL import Image

from aeroaug import AugmentationConfig, augment_dataset, make_toy_dataset
from aeroaug.backends import (ToyDetector, ToyDetectorParams, ToyGenerator,
                              ToyGeneratorParams, calibrate_uniform_scores,
                              default_template_bank)
from aeroaug.engine import write_run_manifest

out = Path(__file__).parent / "out" / "05"
out.mkdir(parents=True, exist_ok=True)

train = make_toy_dataset(8, size=224, instances_per_image=(1, 2), seed=13)
print(f"training set: {len(train)} images, "
      f"{train.annotation_count} instances")

base_params = ToyDetectorParams(templates=default_template_bank(96))
calibrated = calibrate_uniform_scores(
    ToyGenerator(ToyGeneratorParams(quality_range=(0.0, 1.0)), seed=99),
    base_params, train, 96, n_samples=1200, seed=1)

config = AugmentationConfig(target_new_instances=10, patch_size=96,
                            acceptance_threshold=0.4,
                            instances_per_image=2, seed=21)
generator = ToyGenerator(ToyGeneratorParams(quality_range=(0.0, 1.0)),
                         seed=33)
augmented, stats, accepted = augment_dataset(train, generator,
                                             ToyDetector(calibrated), config)

print(f"accepted {stats.accepted}/{config.target_new_instances} "
      f"in {stats.attempts} attempts; "
      f"{stats.rejected_confidence} below threshold, "
      f"{stats.rejected_intersection} holes discarded for overlap")
for inst in accepted[:5]:
    print(f"  {inst.image_id}: hole {inst.bbox} score {inst.score:.2f}")

write_run_manifest(out / "run_manifest.json", config, stats, accepted)

changed = [i for i, (a, b) in enumerate(zip(train.records,
                                            augmented.records))
           if len(b.annotations) > len(a.annotations)][:2]
for idx in changed:
    pair = np.concatenate([train.records[idx].pixels,
                           augmented.records[idx].pixels], axis=1)
    Image.fromarray(pair).save(out / f"before_after_{train.records[idx].id}.png")
print(f"before/after pairs written to {out}")
