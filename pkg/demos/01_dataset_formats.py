"""Datasets on disk: the two annotation formats, splits, oversize filtering.

Writes everything under demos/out/01/.
"""
from pathlib import Path

from aeroaug import (filter_oversized, load_dataset, make_toy_dataset,
                     save_dataset, split_dataset)

out = Path(__file__).parent / "out" / "01"
out.mkdir(parents=True, exist_ok=True)

dataset = make_toy_dataset(12, size=192, instances_per_image=(1, 3), seed=7)
print(f"built {len(dataset)} images, {dataset.annotation_count} instances")

# corner format: one `<label> x0 y0 x1 y1 [orig|synth]` line per instance
save_dataset(dataset, out / "vedai", "vedai")
print("vedai sample line:",
      (out / "vedai" / "toy0000.txt").read_text().splitlines()[0])

# normalized center format plus classes.txt
save_dataset(dataset, out / "yolo", "yolo")
print("yolo sample line: ",
      (out / "yolo" / "toy0000.txt").read_text().splitlines()[0])

reloaded = load_dataset(out / "vedai", "vedai")
assert reloaded.annotation_count == dataset.annotation_count

train, test = split_dataset(dataset, 8, seed=0)
print(f"split: {len(train)} train / {len(test)} test (seeded, disjoint)")

filtered, removed = filter_oversized(train, 48.0)
print(f"oversize filter at 48 px: removed {removed}, "
      f"kept {filtered.annotation_count}")
