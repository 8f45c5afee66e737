"""Square patches: extraction, center masking, hole collision, compositing.

A patch of even side ``s`` has a central ``s/2 x s/2`` hole when masked.
All functions are pure: inputs are never mutated, results are fresh
arrays/records.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import BBox
from .dataset import Annotation, ImageRecord, Provenance
from .errors import (GeometryMismatch, ImageTooSmall, InstanceTooLarge,
                     OddPatchSize)


@dataclass(frozen=True)
class Patch:
    origin: tuple[int, int]  # (x, y) of top-left corner in the parent image
    size: int
    pixels: np.ndarray  # size x size x 3 uint8
    parent_id: str
    instance: Annotation | None = None  # harvested instance, patch-local coords

    def __post_init__(self):
        if self.size % 2 != 0:
            raise OddPatchSize(f"patch size must be even, got {self.size}")
        if self.pixels.shape != (self.size, self.size, 3):
            raise ValueError(f"patch buffer {self.pixels.shape} does not match "
                             f"size {self.size}")

    @property
    def rect(self) -> BBox:
        x, y = self.origin
        return BBox(x, y, x + self.size, y + self.size)


@dataclass(frozen=True)
class MaskedPatch:
    base: Patch          # pixels with the hole zeroed (the generator input)
    hole: BBox           # patch-local, always the centered size/2 square
    mask: np.ndarray     # size x size bool, True exactly inside the hole

    def __post_init__(self):
        s = self.base.size
        expected = BBox(s // 4, s // 4, 3 * s // 4, 3 * s // 4)
        if self.hole != expected:
            raise ValueError(f"hole {self.hole} is not the centered "
                             f"{s // 2}x{s // 2} square")
        ys, xs = np.nonzero(self.mask)
        if len(xs) != (s // 2) ** 2 or (len(xs) and (
                xs.min() != s // 4 or xs.max() != 3 * s // 4 - 1 or
                ys.min() != s // 4 or ys.max() != 3 * s // 4 - 1)):
            raise ValueError("mask does not cover exactly the hole")

    @property
    def hole_slices(self) -> tuple[slice, slice]:
        return (slice(int(self.hole.y_min), int(self.hole.y_max)),
                slice(int(self.hole.x_min), int(self.hole.x_max)))


@dataclass(frozen=True)
class GenerationResult:
    completed: np.ndarray     # size x size x 3 uint8
    hole_content: np.ndarray  # (size/2) x (size/2) x 3 uint8

    def __post_init__(self):
        s = self.completed.shape[0]
        q = s // 4
        crop = self.completed[q:q + s // 2, q:q + s // 2]
        if self.hole_content.shape != crop.shape or not np.array_equal(
                self.hole_content, crop):
            raise GeometryMismatch(
                "hole_content must equal the central crop of completed")

    @staticmethod
    def from_completed(completed: np.ndarray) -> "GenerationResult":
        s = completed.shape[0]
        q = s // 4
        return GenerationResult(completed,
                                completed[q:q + s // 2, q:q + s // 2].copy())


def harvest_instance_patch(image: ImageRecord, annotation: Annotation,
                           patch_size: int) -> Patch:
    """Cut a ``patch_size`` square centered on the instance.

    The origin is clamped so the patch never leaves the image; near the
    border the instance is therefore off-center but always fully inside.
    The returned patch carries the instance re-expressed in patch-local
    coordinates.
    """
    if patch_size % 2 != 0:
        raise OddPatchSize(f"patch size must be even, got {patch_size}")
    bbox = annotation.bbox
    if bbox.width > patch_size / 2 or bbox.height > patch_size / 2:
        raise InstanceTooLarge(
            f"{image.id}: instance {bbox.width:.0f}x{bbox.height:.0f} exceeds "
            f"{patch_size // 2} (half the patch side)")
    if image.width < patch_size or image.height < patch_size:
        raise ImageTooSmall(
            f"{image.id}: {image.width}x{image.height} smaller than patch "
            f"{patch_size}")
    cx, cy = bbox.center
    ox = int(math.floor(cx + 0.5)) - patch_size // 2
    oy = int(math.floor(cy + 0.5)) - patch_size // 2
    ox = min(max(ox, 0), image.width - patch_size)
    oy = min(max(oy, 0), image.height - patch_size)
    pixels = image.pixels[oy:oy + patch_size, ox:ox + patch_size].copy()
    local = Annotation(bbox.translate(-ox, -oy), annotation.label,
                       annotation.provenance)
    return Patch((ox, oy), patch_size, pixels, image.id, local)


def sample_patch_origin(image: ImageRecord, patch_size: int,
                        rng: np.random.Generator) -> tuple[int, int]:
    """Uniform origin over all positions keeping the patch inside the image."""
    if image.width < patch_size or image.height < patch_size:
        raise ImageTooSmall(
            f"{image.id}: {image.width}x{image.height} smaller than patch "
            f"{patch_size}")
    x = int(rng.integers(0, image.width - patch_size + 1))
    y = int(rng.integers(0, image.height - patch_size + 1))
    return x, y


def extract_patch(image: ImageRecord, origin: tuple[int, int],
                  patch_size: int) -> Patch:
    x, y = origin
    if not (0 <= x <= image.width - patch_size and
            0 <= y <= image.height - patch_size):
        raise GeometryMismatch(
            f"{image.id}: origin {origin} puts a {patch_size} patch outside "
            f"the {image.width}x{image.height} image")
    pixels = image.pixels[y:y + patch_size, x:x + patch_size].copy()
    return Patch((x, y), patch_size, pixels, image.id)


def mask_center(patch: Patch) -> MaskedPatch:
    """Zero out the central half-size square in a copy of the patch."""
    if patch.size % 2 != 0:
        raise OddPatchSize(f"patch size must be even, got {patch.size}")
    s = patch.size
    q = s // 4
    hole = BBox(q, q, q + s // 2, q + s // 2)
    mask = np.zeros((s, s), dtype=bool)
    mask[q:q + s // 2, q:q + s // 2] = True
    pixels = patch.pixels.copy()
    pixels[mask] = 0
    masked_base = Patch(patch.origin, s, pixels, patch.parent_id,
                        patch.instance)
    return MaskedPatch(masked_base, hole, mask)


def hole_rect_global(masked: MaskedPatch) -> BBox:
    """The hole rectangle translated into parent-image coordinates."""
    ox, oy = masked.base.origin
    return masked.hole.translate(ox, oy)


def intersects_any(rect: BBox, annotations) -> bool:
    """True iff ``rect`` shares strictly positive area with any annotation box."""
    return any(rect.intersects(a.bbox) for a in annotations)


def composite_hole(image: ImageRecord, masked: MaskedPatch,
                   result: GenerationResult) -> ImageRecord:
    """Paste the generated hole content back into a copy of the image.

    Only the hole region changes; the surrounding context ring comes from
    the original image, which keeps seams minimal and makes the
    pixels-outside-hole invariant checkable bit-exactly. Annotations are
    untouched (recording the new instance is the augmentation loop's job).
    """
    rect = hole_rect_global(masked)
    if not rect.inside_image(image.width, image.height):
        raise GeometryMismatch(
            f"{image.id}: hole {rect} outside {image.width}x{image.height}")
    if masked.base.parent_id != image.id:
        raise GeometryMismatch(
            f"patch from {masked.base.parent_id!r} composited into {image.id!r}")
    half = masked.base.size // 2
    if result.hole_content.shape != (half, half, 3):
        raise GeometryMismatch(
            f"hole content {result.hole_content.shape} does not match "
            f"{half}x{half}")
    pixels = image.pixels.copy()
    x0, y0 = int(rect.x_min), int(rect.y_min)
    pixels[y0:y0 + half, x0:x0 + half] = result.hole_content
    return image.with_pixels(pixels)


def synthetic_annotation(masked: MaskedPatch, label: str) -> Annotation:
    """Annotation for a generated instance: the global hole rect, synthetic flag."""
    return Annotation(hole_rect_global(masked), label, Provenance.SYNTHETIC)
