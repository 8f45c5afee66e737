"""ML-free stand-in backends: a sprite compositor and a correlation detector.

The toy generator fills the hole with context-interpolated background, a
randomized vehicle sprite, and additive noise scaled by ``1 - quality``.
The toy detector slides a small grayscale template bank over the image
(normalized cross-correlation), keeps local maxima, and maps raw
correlation to confidence through a monotone score map.

``calibrate_uniform_scores`` rebuilds that score map from an empirical
sample so the generate-then-score pipeline produces near-uniform
confidences on [0,1] - the calibration the attempt-count experiments rely
on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as spfft
from scipy.ndimage import maximum_filter, zoom

from ..boxes import BBox
from ..dataset import Dataset
from ..errors import EmptyDataset
from ..metrics import Detection
from ..patches import (GenerationResult, MaskedPatch, extract_patch,
                       hole_rect_global, intersects_any, mask_center,
                       sample_patch_origin)
from ..sprites import draw_vehicle
from .base import DetectorBackend, GeneratorBackend, score_generated

LUMA = np.array([0.299, 0.587, 0.114])

DEFAULT_PALETTE = (
    (196.0, 198.0, 202.0),  # silver
    (176.0, 52.0, 48.0),    # red
    (52.0, 70.0, 150.0),    # blue
    (228.0, 226.0, 218.0),  # white
    (38.0, 40.0, 44.0),     # near-black
)


# --- generator ----------------------------------------------------------------

@dataclass(frozen=True)
class ToyGeneratorParams:
    quality: float = 1.0
    quality_range: tuple[float, float] | None = None  # per-fill U(lo,hi) draw
    palette: tuple = DEFAULT_PALETTE
    noise_scale: float = 150.0

    def __post_init__(self):
        if not (0.0 <= self.quality <= 1.0):
            raise ValueError(f"quality {self.quality} outside [0,1]")
        if self.quality_range is not None:
            lo, hi = self.quality_range
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"quality_range {self.quality_range} invalid")


def _fill_background(pixels: np.ndarray, hole_slices) -> None:
    """Fill the hole by blending row-wise and column-wise context lerps."""
    ys, xs = hole_slices
    y0, y1, x0, x1 = ys.start, ys.stop, xs.start, xs.stop
    left = pixels[y0:y1, x0 - 1, :].astype(np.float32)
    right = pixels[y0:y1, x1, :].astype(np.float32)
    top = pixels[y0 - 1, x0:x1, :].astype(np.float32)
    bottom = pixels[y1, x0:x1, :].astype(np.float32)
    n = x1 - x0
    t = ((np.arange(n) + 1.0) / (n + 1.0)).astype(np.float32)
    horiz = left[:, None, :] + t[None, :, None] * (right - left)[:, None, :]
    vert = top[None, :, :] + t[:, None, None] * (bottom - top)[None, :, :]
    pixels[y0:y1, x0:x1] = np.clip((horiz + vert) / 2.0, 0, 255).astype(np.uint8)


def toy_generate(masked: MaskedPatch, params: ToyGeneratorParams,
                 rng: np.random.Generator) -> GenerationResult:
    """Deterministic under (params, rng state); the context ring is untouched."""
    s = masked.base.size
    half = s // 2
    completed = masked.base.pixels.copy()
    _fill_background(completed, masked.hole_slices)

    if params.quality_range is not None:
        lo, hi = params.quality_range
        quality = float(rng.uniform(lo, hi))
    else:
        quality = params.quality

    hole = masked.hole
    hcx, hcy = hole.center
    jitter = half / 8.0
    cx = hcx + rng.uniform(-jitter, jitter)
    cy = hcy + rng.uniform(-jitter, jitter)
    length = half * rng.uniform(0.40, 0.60)
    width = length * rng.uniform(0.42, 0.52)
    angle = rng.uniform(0.0, math.pi)
    body = np.asarray(params.palette[rng.integers(len(params.palette))],
                      dtype=np.float32)
    body = np.clip(body + rng.uniform(-18.0, 18.0, 3).astype(np.float32),
                   0, 255)
    cabin = body * 0.45

    region = completed.astype(np.float32)
    draw_vehicle(region, (cx, cy), length, width, angle, body, cabin)
    if quality < 1.0:
        ys, xs = masked.hole_slices
        noise = rng.normal(0.0, params.noise_scale * (1.0 - quality),
                           (half, half, 3))
        region[ys, xs] += noise.astype(np.float32)
    out = np.clip(region, 0, 255).astype(np.uint8)
    # everything outside the hole reverts to the input, sprite overhang included
    keep = ~masked.mask
    out[keep] = masked.base.pixels[keep]
    return GenerationResult.from_completed(out)


class ToyGenerator(GeneratorBackend):
    deterministic = True

    def __init__(self, params: ToyGeneratorParams | None = None, seed: int = 0):
        self.params = params or ToyGeneratorParams()
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def fill(self, masked: MaskedPatch) -> GenerationResult:
        return toy_generate(masked, self.params, self._rng)


# --- detector -------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreMap:
    """Monotone piecewise-linear map from raw correlation to [0,1]."""
    xs: tuple[float, ...] = (0.0, 1.0)
    ys: tuple[float, ...] = (0.0, 1.0)

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) < 2:
            raise ValueError("score map needs matching xs/ys, at least 2 points")
        if any(b < a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("score map xs must be sorted")
        if any(b < a for a, b in zip(self.ys, self.ys[1:])):
            raise ValueError("score map must be monotone non-decreasing")
        if min(self.ys) < 0.0 or max(self.ys) > 1.0:
            raise ValueError("score map range must stay in [0,1]")

    def __call__(self, value: float) -> float:
        return float(np.interp(value, self.xs, self.ys))

    def map_array(self, values: np.ndarray) -> np.ndarray:
        return np.interp(values, self.xs, self.ys)


@dataclass(frozen=True)
class ToyDetectorParams:
    templates: tuple = ()  # grayscale float arrays, all the same square size
    score_map: ScoreMap = field(default_factory=ScoreMap)
    detection_threshold: float = 0.30  # on raw |correlation|
    max_detections: int = 64
    label: str = "car"

    def __post_init__(self):
        if not self.templates:
            raise ValueError("template bank must be non-empty")
        t = self.templates[0].shape
        if any(tpl.shape != t for tpl in self.templates):
            raise ValueError("all templates must share one shape")


def _to_gray(image: np.ndarray) -> np.ndarray:
    if image.ndim == 3:
        return image.astype(np.float64) @ LUMA
    return image.astype(np.float64)


def _window_sums(values: np.ndarray, th: int, tw: int) -> np.ndarray:
    """Sum over every valid th x tw window, via an integral image."""
    integral = np.zeros((values.shape[0] + 1, values.shape[1] + 1))
    integral[1:, 1:] = values.cumsum(0).cumsum(1)
    return (integral[th:, tw:] - integral[:-th, tw:] -
            integral[th:, :-tw] + integral[:-th, :-tw])


def _ncc_response(gray: np.ndarray, params: ToyDetectorParams,
                  fft_cache: dict | None) -> np.ndarray:
    """Max over the bank of |NCC|, valid-mode (one image FFT, cached bank FFTs)."""
    th, tw = params.templates[0].shape
    height, width = gray.shape
    wsum = _window_sums(gray, th, tw)
    wsum2 = _window_sums(gray * gray, th, tw)
    win_var = np.maximum(wsum2 - wsum * wsum / (th * tw), 0.0)
    denom_base = np.sqrt(win_var)

    fshape = (spfft.next_fast_len(height + th - 1, real=True),
              spfft.next_fast_len(width + tw - 1, real=True))
    key = (fshape, th, tw)
    bank = fft_cache.get(key) if fft_cache is not None else None
    if bank is None:
        bank = []
        for template in params.templates:
            t0 = template - template.mean()
            tnorm = math.sqrt(float((t0 * t0).sum()))
            bank.append((spfft.rfft2(t0[::-1, ::-1], fshape), tnorm))
        if fft_cache is not None:
            fft_cache[key] = bank
    gray_fft = spfft.rfft2(gray, fshape)

    best = None
    for tpl_fft, tnorm in bank:
        if tnorm == 0.0:
            continue
        full = spfft.irfft2(gray_fft * tpl_fft, fshape)
        num = full[th - 1:height, tw - 1:width]
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = num / (denom_base * tnorm)
        corr[~np.isfinite(corr)] = 0.0
        np.abs(corr, out=corr)
        np.clip(corr, 0.0, 1.0, out=corr)
        best = corr if best is None else np.maximum(best, corr)
    if best is None:
        best = np.zeros_like(denom_base)
    return best


def toy_detect(image: np.ndarray, params: ToyDetectorParams,
               fft_cache: dict | None = None) -> list[Detection]:
    """Template-bank NCC with local-maximum picking.

    The response is |NCC|, so bright-on-dark and dark-on-bright vehicles
    match the same bank.
    """
    th, tw = params.templates[0].shape
    if image.shape[0] < th or image.shape[1] < tw:
        raise ValueError(f"image {image.shape} smaller than template {th}x{tw}")
    best = _ncc_response(_to_gray(image), params, fft_cache)

    sep = max(th // 4, 4)
    is_peak = (best >= maximum_filter(best, size=sep)) & \
              (best >= params.detection_threshold)
    ys, xs = np.nonzero(is_peak)
    if len(xs) == 0:
        return []
    values = best[ys, xs]
    order = np.argsort(-values, kind="stable")[:params.max_detections]
    confs = np.clip(params.score_map.map_array(values[order]), 0.0, 1.0)
    detections = []
    for k, conf in zip(order, confs):
        x, y = int(xs[k]), int(ys[k])
        detections.append(Detection(BBox(x, y, x + tw, y + th), float(conf),
                                    params.label))
    return detections


class ToyDetector(DetectorBackend):
    def __init__(self, params: ToyDetectorParams):
        self.params = params
        self.min_input = params.templates[0].shape[0]
        self._fft_cache: dict = {}  # template FFTs per padded shape

    def detect(self, image: np.ndarray) -> list[Detection]:
        return toy_detect(image, self.params, self._fft_cache)


def default_template_bank(patch_size: int = 96, n_angles: int = 6) -> tuple:
    """Canonical vehicle sprite at evenly spaced headings.

    Template geometry tracks ``patch_size`` so the sprite scale matches
    what the toy generator paints into a hole of half that size.
    """
    size = max(2 * (patch_size // 6), 8)
    length = patch_size / 2.0 * 0.50  # center of the generator's length range
    templates = []
    for k in range(n_angles):
        angle = math.pi * k / n_angles
        canvas = np.full((size, size, 3), 90.0, dtype=np.float32)
        draw_vehicle(canvas, (size / 2.0, size / 2.0), length, length * 0.47,
                     angle, (210.0, 210.0, 210.0), (95.0, 95.0, 95.0))
        templates.append(_to_gray(canvas))
    return tuple(templates)


def _tighten_crop(crop: np.ndarray) -> np.ndarray:
    """Shrink a crop to the content that stands out from its background.

    Annotation boxes for generated instances span the whole hole, so the
    vehicle occupies only part of them; without tightening those
    templates would be scale-mismatched against real tight boxes.
    """
    dev = np.abs(crop - np.median(crop))
    mask = dev >= max(float(dev.max()) * 0.35, 1e-6)
    if mask.sum() < 9:
        return crop
    ys, xs = np.nonzero(mask)
    y0 = max(int(ys.min()) - 2, 0)
    y1 = min(int(ys.max()) + 3, crop.shape[0])
    x0 = max(int(xs.min()) - 2, 0)
    x1 = min(int(xs.max()) + 3, crop.shape[1])
    if y1 - y0 < 6 or x1 - x0 < 6:
        return crop
    return crop[y0:y1, x0:x1]


def build_eval_detector(train: Dataset, seed: int = 0, template_size: int = 24,
                        bank_size: int = 28,
                        detection_threshold: float = 0.45) -> ToyDetector:
    """Fit a detector to a training set by sampling instance crops as templates.

    This is the toy counterpart of retraining a detector on the
    (augmented) training images: more and more varied instances give the
    bank better heading coverage.
    """
    crops = []
    for rec in train.records:
        for ann in rec.annotations:
            b = ann.bbox
            x0, y0 = int(b.x_min), int(b.y_min)
            x1, y1 = max(int(math.ceil(b.x_max)), x0 + 2), \
                max(int(math.ceil(b.y_max)), y0 + 2)
            crop = _to_gray(rec.pixels[y0:y1, x0:x1])
            if crop.shape[0] < 4 or crop.shape[1] < 4:
                continue
            crop = _tighten_crop(crop)
            factors = (template_size / crop.shape[0],
                       template_size / crop.shape[1])
            crops.append(zoom(crop, factors, order=1)[:template_size,
                                                      :template_size])
    if not crops:
        raise EmptyDataset("no instances to build templates from")
    rng = np.random.default_rng(seed)
    if len(crops) > bank_size:
        picked = rng.choice(len(crops), size=bank_size, replace=False)
        crops = [crops[i] for i in sorted(picked)]
    params = ToyDetectorParams(templates=tuple(crops),
                               detection_threshold=detection_threshold,
                               max_detections=64)
    return ToyDetector(params)


# --- uniform-score calibration ----------------------------------------------------

def calibrate_uniform_scores(generator: ToyGenerator,
                             detector_params: ToyDetectorParams,
                             backgrounds: Dataset, patch_size: int,
                             n_samples: int = 4000,
                             seed: int = 0) -> ToyDetectorParams:
    """Rebuild the score map so pipeline scores are ~Uniform[0,1].

    Samples the same candidate distribution the augmentation loop draws
    from, records the raw hole-gated correlation of each candidate, and
    maps correlations through the empirical CDF. Candidates with no
    hole-overlapping detection score 0.0 by definition; their share z is
    folded in by mapping the rest onto [z, 1], which keeps
    P(score > t) = 1 - t for thresholds above z.
    """
    probe_params = replace(detector_params,
                           score_map=ScoreMap((0.0, 1.0), (0.0, 1.0)),
                           detection_threshold=-1.0)
    probe = ToyDetector(probe_params)
    rng = np.random.default_rng(seed)
    records = [r for r in backgrounds.records
               if r.width >= patch_size and r.height >= patch_size]
    if not records:
        raise EmptyDataset(f"no backgrounds of at least {patch_size} px")

    raw_values = []
    misses = 0
    tries = 0
    collected = 0
    while collected < n_samples:
        tries += 1
        if tries > 100 * n_samples:
            raise EmptyDataset("could not sample enough hole candidates")
        rec = records[int(rng.integers(len(records)))]
        origin = sample_patch_origin(rec, patch_size, rng)
        patch = extract_patch(rec, origin, patch_size)
        masked = mask_center(patch)
        if intersects_any(hole_rect_global(masked), rec.annotations):
            continue
        result = generator.fill(masked)
        conf = score_generated(probe, result, masked)
        collected += 1
        if conf == 0.0:
            misses += 1
        else:
            raw_values.append(conf)  # probe map is the identity on [0,1]

    z = misses / n_samples
    raw = np.sort(np.asarray(raw_values))
    quantiles = z + (1.0 - z) * (np.arange(1, len(raw) + 1) / (len(raw) + 1.0))
    xs, idx = np.unique(raw, return_index=True)
    ys = []
    start = list(idx) + [len(raw)]
    for i in range(len(xs)):
        ys.append(float(quantiles[start[i]:start[i + 1]].mean()))
    if len(xs) > 257:
        # thin to ~256 quantile knots; linear interpolation between
        # quantiles is the estimator anyway
        keep = np.unique(np.linspace(0, len(xs) - 1, 257).astype(int))
        xs = xs[keep]
        ys = [ys[i] for i in keep]
    score_map = ScoreMap(tuple(float(x) for x in xs), tuple(ys))
    return replace(detector_params, score_map=score_map,
                   detection_threshold=-1.0)
