"""The built-in backends: sprite generator quality knob, correlation detector.

Saves fills at several quality levels to demos/out/04/.
"""
from pathlib import Path

import numpy as np
from PIL import Image

from aeroaug import make_toy_dataset
from aeroaug.backends import (ToyDetector, ToyDetectorParams, ToyGenerator,
                              ToyGeneratorParams, default_template_bank,
                              score_generated)
from aeroaug.patches import extract_patch, mask_center

out = Path(__file__).parent / "out" / "04"
out.mkdir(parents=True, exist_ok=True)

backgrounds = make_toy_dataset(3, size=256, instances_per_image=(0, 0),
                               seed=5)
masked = mask_center(extract_patch(backgrounds.records[0], (60, 80), 96))

detector = ToyDetector(ToyDetectorParams(templates=default_template_bank(96),
                                         detection_threshold=-1.0))
tiles = [masked.base.pixels]
for quality in (0.0, 0.3, 0.6, 0.9, 1.0):
    generator = ToyGenerator(ToyGeneratorParams(quality=quality), seed=42)
    result = generator.fill(masked)
    score = score_generated(detector, result, masked)
    print(f"quality {quality:>4}: hole-gated detector score {score:.3f}")
    tiles.append(result.completed)

Image.fromarray(np.concatenate(tiles, axis=1)).save(out / "quality_sweep.png")
print("left to right: masked input, fills at quality 0.0 .. 1.0 ->",
      out / "quality_sweep.png")

# the detector on a full scene
scene = make_toy_dataset(1, size=224, instances_per_image=(3, 3), seed=9)
record = scene.records[0]
detections = detector.detect(record.pixels)
print(f"{len(detections)} raw detections on a 3-vehicle scene; top three:")
for det in detections[:3]:
    print(f"  {det.bbox} confidence {det.confidence:.2f}")
