"""Patch geometry: harvesting around instances, center masks, hole collision.

Saves a strip of harvested and masked patches to demos/out/02/.
"""
from pathlib import Path

import numpy as np
from PIL import Image

from aeroaug import make_toy_dataset
from aeroaug.patches import (harvest_instance_patch, hole_rect_global,
                             intersects_any, mask_center, sample_patch_origin,
                             extract_patch)

out = Path(__file__).parent / "out" / "02"
out.mkdir(parents=True, exist_ok=True)

dataset = make_toy_dataset(4, size=224, instances_per_image=(2, 3), seed=11)
record = dataset.records[0]

patches = [harvest_instance_patch(record, ann, 96)
           for ann in record.annotations]
print(f"harvested {len(patches)} patches of 96x96 from {record.id}")
for patch in patches:
    print(f"  origin {patch.origin}, instance (patch-local) "
          f"{patch.instance.bbox}")

strip = np.concatenate([p.pixels for p in patches], axis=1)
Image.fromarray(strip).save(out / "harvested.png")

masked = [mask_center(p) for p in patches]
strip = np.concatenate([m.base.pixels for m in masked], axis=1)
Image.fromarray(strip).save(out / "masked.png")
print("hole is always the centered half-size square:", masked[0].hole)

# candidate sampling with the collision rule the augmentation loop uses
rng = np.random.default_rng(3)
kept, discarded = 0, 0
for _ in range(200):
    origin = sample_patch_origin(record, 96, rng)
    hole = hole_rect_global(mask_center(extract_patch(record, origin, 96)))
    if intersects_any(hole, record.annotations):
        discarded += 1
    else:
        kept += 1
print(f"200 random holes on {record.id}: {kept} clear, "
      f"{discarded} touched an instance (discarded before generation)")
