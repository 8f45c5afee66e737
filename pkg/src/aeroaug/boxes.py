"""Axis-aligned boxes in pixel coordinates.

Boxes are half-open on both axes: [x_min, x_max) x [y_min, y_max). With
integer coordinates a box covers exactly the integer pixel cells
x_min..x_max-1 / y_min..y_max-1, so areas and overlaps agree with plain
cell counting and touching edges never count as overlap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not math.isfinite(v):
                raise ValueError(f"non-finite box coordinate: {self}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"box must have strictly positive area: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x_min + dx, self.y_min + dy,
                    self.x_max + dx, self.y_max + dy)

    def intersection_area(self, other: "BBox") -> float:
        w = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        h = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if w <= 0.0 or h <= 0.0:
            return 0.0
        return w * h

    def intersects(self, other: "BBox") -> bool:
        """True iff the shared area is strictly positive (edge contact is not overlap)."""
        return self.intersection_area(other) > 0.0

    def contains_box(self, other: "BBox") -> bool:
        return (self.x_min <= other.x_min and other.x_max <= self.x_max and
                self.y_min <= other.y_min and other.y_max <= self.y_max)

    def inside_image(self, width: int, height: int) -> bool:
        return (0.0 <= self.x_min and self.x_max <= width and
                0.0 <= self.y_min and self.y_max <= height)
