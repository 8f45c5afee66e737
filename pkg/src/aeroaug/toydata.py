"""Synthetic desk-scale datasets: textured ground with sprite vehicles.

Fixtures produced here share the sprite primitive with the toy generator,
so correlation templates fitted on one transfer to the other. Real data
drops in through the same ``Dataset`` type.
"""
from __future__ import annotations

import math

import numpy as np

from .boxes import BBox
from .dataset import Annotation, Dataset, ImageRecord
from .sprites import draw_vehicle, textured_background, vehicle_extent

TOY_PALETTE = (
    (196.0, 198.0, 202.0),
    (176.0, 52.0, 48.0),
    (52.0, 70.0, 150.0),
    (228.0, 226.0, 218.0),
    (38.0, 40.0, 44.0),
)


def make_toy_image(image_id: str, size: int, n_instances: int,
                   rng: np.random.Generator, label: str = "car",
                   length_range: tuple[float, float] = (18.0, 30.0),
                   max_place_tries: int = 40) -> ImageRecord:
    canvas = textured_background(size, size, rng)
    annotations = []
    for _ in range(n_instances):
        placed = None
        for _ in range(max_place_tries):
            length = rng.uniform(*length_range)
            width = length * rng.uniform(0.40, 0.52)
            angle = rng.uniform(0.0, math.pi)
            ex, ey = vehicle_extent(length, width, angle)
            cx = rng.uniform(ex + 1.0, size - ex - 1.0)
            cy = rng.uniform(ey + 1.0, size - ey - 1.0)
            bbox = BBox(cx - ex, cy - ey, cx + ex, cy + ey)
            if any(bbox.intersects(a.bbox) for a in annotations):
                continue
            placed = (cx, cy, length, width, angle, bbox)
            break
        if placed is None:
            continue  # crowded image, keep the ones that fit
        cx, cy, length, width, angle, bbox = placed
        body = np.asarray(TOY_PALETTE[rng.integers(len(TOY_PALETTE))],
                          dtype=np.float32)
        body = np.clip(body + rng.uniform(-18.0, 18.0, 3).astype(np.float32),
                       0, 255)
        draw_vehicle(canvas, (cx, cy), length, width, angle, body, body * 0.45)
        annotations.append(Annotation(bbox, label))
    pixels = np.clip(canvas, 0, 255).astype(np.uint8)
    return ImageRecord(image_id, pixels, tuple(annotations))


def make_toy_dataset(n_images: int, size: int = 192,
                     instances_per_image: tuple[int, int] = (1, 3),
                     seed: int = 0, label: str = "car",
                     id_prefix: str = "toy",
                     length_range: tuple[float, float] = (18.0, 30.0),
                     ) -> Dataset:
    """Seeded dataset of ``n_images`` square images with sprite vehicles."""
    rng = np.random.default_rng(seed)
    lo, hi = instances_per_image
    records = []
    for i in range(n_images):
        n = int(rng.integers(lo, hi + 1))
        records.append(make_toy_image(f"{id_prefix}{i:04d}", size, n, rng,
                                      label, length_range))
    return Dataset(tuple(records), frozenset([label]))
