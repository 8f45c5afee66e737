"""Generator/detector backend interfaces and the hole-gated scoring rule.

A generator fills the masked center of a patch; a detector returns scored
boxes for an image. Anything implementing these two methods plugs into
the augmentation loop, whether it is the built-in toy pair or an external
process driven over the wire protocol.
"""
from __future__ import annotations

import abc

import numpy as np

from ..metrics import Detection, iou
from ..patches import GenerationResult, MaskedPatch

# a detection must overlap the hole at least this much to count as the
# generated instance rather than a background response
HOLE_IOU_GATE = 0.25


class GeneratorBackend(abc.ABC):
    #: patch side length the backend expects, or None for any even size
    patch_size: int | None = None
    #: same masked input always yields the same fill for a fresh instance
    deterministic: bool = False

    @abc.abstractmethod
    def fill(self, masked: MaskedPatch) -> GenerationResult:
        """Complete the hole; the returned raster is exactly patch-sized."""


class DetectorBackend(abc.ABC):
    #: smallest image side the backend accepts
    min_input: int = 1

    @abc.abstractmethod
    def detect(self, image: np.ndarray) -> list[Detection]:
        """Scored boxes, each inside the image with confidence in [0,1]."""


def score_generated(detector: DetectorBackend, result: GenerationResult,
                    masked: MaskedPatch) -> float:
    """Detector confidence that the filled hole contains an instance.

    Runs the detector on the completed patch and returns the maximum
    confidence among detections overlapping the hole rectangle (IoU >=
    0.25, patch-local); 0.0 when nothing overlaps, so far-away false
    positives never vouch for the generated content.
    """
    if result.completed.shape[:2] != (masked.base.size, masked.base.size):
        raise ValueError(
            f"completed raster {result.completed.shape} does not match patch "
            f"size {masked.base.size}")
    best = 0.0
    for det in detector.detect(result.completed):
        if iou(det.bbox, masked.hole) >= HOLE_IOU_GATE:
            best = max(best, det.confidence)
    return best
