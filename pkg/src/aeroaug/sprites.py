"""Procedural vehicle-like sprites used by the toy backends and fixtures.

A sprite is a rotated rounded rectangle (car body) with a darker cabin
band, painted with a one-pixel soft edge. The same primitive draws the
fixture datasets and the toy generator's fills, so templates built from
one match the other.
"""
from __future__ import annotations

import math

import numpy as np


def draw_vehicle(canvas: np.ndarray, center: tuple[float, float],
                 length: float, width: float, angle: float,
                 body_color, cabin_color=None, edge: float = 1.0) -> None:
    """Paint a vehicle onto ``canvas`` (HxWx3 float32, in place).

    ``angle`` is radians counterclockwise from the x axis; ``length`` runs
    along the heading, ``width`` across it.
    """
    h, w = canvas.shape[:2]
    cx, cy = center
    radius = math.hypot(length, width) / 2.0 + edge + 1.0
    x0 = max(int(cx - radius), 0)
    x1 = min(int(cx + radius) + 1, w)
    y0 = max(int(cy - radius), 0)
    y1 = min(int(cy + radius) + 1, h)
    if x0 >= x1 or y0 >= y1:
        return

    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx = xs + 0.5 - cx
    dy = ys + 0.5 - cy
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    u = cos_a * dx + sin_a * dy
    v = -sin_a * dx + cos_a * dy

    corner = min(length, width) * 0.25
    qu = np.abs(u) - (length / 2.0 - corner)
    qv = np.abs(v) - (width / 2.0 - corner)
    dist = np.hypot(np.maximum(qu, 0.0), np.maximum(qv, 0.0)) - corner
    alpha = np.clip(0.5 - dist / edge, 0.0, 1.0)

    body = np.asarray(body_color, dtype=np.float32)
    region = canvas[y0:y1, x0:x1]
    region += alpha[..., None] * (body - region)

    if cabin_color is not None:
        cabin = np.asarray(cabin_color, dtype=np.float32)
        band = ((u > length * 0.02) & (u < length * 0.30) &
                (np.abs(v) < width * 0.38))
        cab_alpha = alpha * band
        region += cab_alpha[..., None] * (cabin - region)


def vehicle_extent(length: float, width: float, angle: float,
                   edge: float = 1.0) -> tuple[float, float]:
    """Half-extents (ex, ey) of the axis-aligned box around the sprite."""
    cos_a, sin_a = abs(math.cos(angle)), abs(math.sin(angle))
    ex = (cos_a * length + sin_a * width) / 2.0 + edge
    ey = (sin_a * length + cos_a * width) / 2.0 + edge
    return ex, ey


def textured_background(height: int, width: int, rng: np.random.Generator,
                        base=(96.0, 104.0, 88.0), relief: float = 18.0,
                        grain: float = 6.0) -> np.ndarray:
    """Ground-like float32 canvas: smooth low-frequency relief plus fine grain."""
    coarse = rng.normal(0.0, 1.0, (max(height // 16, 2), max(width // 16, 2)))
    from scipy.ndimage import zoom
    field = zoom(coarse, (height / coarse.shape[0], width / coarse.shape[1]),
                 order=1)[:height, :width]
    canvas = np.empty((height, width, 3), dtype=np.float32)
    canvas[:] = np.asarray(base, dtype=np.float32)
    canvas += (relief * field)[..., None].astype(np.float32)
    canvas += rng.normal(0.0, grain, (height, width, 3)).astype(np.float32)
    return canvas
