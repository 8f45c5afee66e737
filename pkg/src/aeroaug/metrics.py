"""Detection quality: IoU, greedy matching, precision/recall, Average Precision.

Matching follows the common single-class convention: detections are
processed in descending confidence (stable on ties) and each one claims
the highest-IoU not-yet-matched ground truth at or above the IoU
threshold. AP integrates the all-points interpolated precision envelope
over recall, so results depend only on the confidence ordering.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .boxes import BBox
from .dataset import Dataset
from .errors import IoFailure, MalformedAnnotation, UnknownImageId, ZeroGroundTruth


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    confidence: float
    label: str = "car"

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0,1]")


@dataclass(frozen=True)
class MatchOutcome:
    tp_flags: tuple[bool, ...]  # per detection, descending-confidence order
    fn_count: int

    def __post_init__(self):
        if self.fn_count < 0:
            raise ValueError("fn_count cannot be negative")

    @property
    def tp_count(self) -> int:
        return sum(self.tp_flags)

    @property
    def total_gt(self) -> int:
        return self.tp_count + self.fn_count


@dataclass(frozen=True)
class PRCurve:
    points: tuple[tuple[float, float], ...]  # (recall, precision)

    def __post_init__(self):
        last = -1.0
        for recall, precision in self.points:
            if not (0.0 <= recall <= 1.0 and 0.0 <= precision <= 1.0):
                raise ValueError(f"point ({recall}, {precision}) outside unit square")
            if recall < last:
                raise ValueError("recall must be non-decreasing")
            last = recall


def iou(a: BBox, b: BBox) -> float:
    """Intersection area over union area; 0 for disjoint boxes."""
    inter = a.intersection_area(b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def match_detections(preds: list[Detection], gts: list[BBox],
                     iou_threshold: float) -> MatchOutcome:
    if not (0.0 < iou_threshold <= 1.0):
        raise ValueError(f"iou_threshold {iou_threshold} outside (0,1]")
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    taken = [False] * len(gts)
    flags = []
    for i in order:
        best_j = -1
        best_iou = 0.0
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            value = iou(preds[i].bbox, gt)
            if value >= iou_threshold and value > best_iou:
                best_iou = value
                best_j = j
        if best_j >= 0:
            taken[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return MatchOutcome(tuple(flags), len(gts) - sum(taken))


def pr_curve(outcome: MatchOutcome, total_gt: int) -> PRCurve:
    """Cumulative precision/recall after each detection in confidence order."""
    if total_gt < outcome.tp_count:
        raise ValueError(f"total_gt {total_gt} below matched count "
                         f"{outcome.tp_count}")
    if total_gt == 0:
        if outcome.tp_flags:
            raise ZeroGroundTruth(
                "predictions present but there is no ground truth")
        return PRCurve(())
    points = []
    tp = 0
    for k, flag in enumerate(outcome.tp_flags, 1):
        tp += int(flag)
        points.append((tp / total_gt, tp / k))
    return PRCurve(tuple(points))


def average_precision(curve: PRCurve) -> float:
    """Area under the interpolated envelope max-precision-to-the-right."""
    if not curve.points:
        return 0.0
    n = len(curve.points)
    envelope = [0.0] * n
    best = 0.0
    for i in range(n - 1, -1, -1):
        best = max(best, curve.points[i][1])
        envelope[i] = best
    area = 0.0
    prev_recall = 0.0
    for i in range(n):
        recall = curve.points[i][0]
        area += (recall - prev_recall) * envelope[i]
        prev_recall = recall
    return area


def evaluate(dataset_gt: Dataset, predictions: dict[str, list[Detection]],
             iou_thresholds=(0.2, 0.5, 0.7)) -> dict[float, float]:
    """Single-class AP per IoU threshold, pooled over all images.

    ``predictions`` maps image id to that image's detections. Detections
    are ranked globally by confidence; each can only match ground truth
    of its own image.
    """
    known = {rec.id for rec in dataset_gt.records}
    for image_id in predictions:
        if image_id not in known:
            raise UnknownImageId(image_id)

    gts_by_image = {rec.id: [a.bbox for a in rec.annotations]
                    for rec in dataset_gt.records}
    total_gt = sum(len(v) for v in gts_by_image.values())

    result = {}
    for threshold in iou_thresholds:
        merged = []  # (confidence, image index, rank within image, tp flag)
        for img_idx, rec in enumerate(dataset_gt.records):
            preds = predictions.get(rec.id, [])
            if not preds:
                continue
            outcome = match_detections(preds, gts_by_image[rec.id], threshold)
            confs = sorted((p.confidence for p in preds), reverse=True)
            for rank, (conf, flag) in enumerate(zip(confs, outcome.tp_flags)):
                merged.append((-conf, img_idx, rank, flag))
        merged.sort()
        flags = tuple(flag for *_, flag in merged)
        curve = pr_curve(MatchOutcome(flags, total_gt - sum(flags)), total_gt)
        result[threshold] = average_precision(curve)
    return result


# --- prediction files --------------------------------------------------------
# One detection per line: <image-id> <label> <confidence> <x_min> <y_min> <x_max> <y_max>

def save_predictions(predictions: dict[str, list[Detection]], path) -> None:
    lines = []
    for image_id, dets in predictions.items():
        for d in dets:
            b = d.bbox
            lines.append(f"{image_id} {d.label} {d.confidence!r} "
                         f"{b.x_min!r} {b.y_min!r} {b.x_max!r} {b.y_max!r}")
    try:
        Path(path).write_text("".join(line + "\n" for line in lines))
    except OSError as exc:
        raise IoFailure(str(path), str(exc)) from None


def load_predictions(path) -> dict[str, list[Detection]]:
    path = Path(path)
    if not path.is_file():
        raise IoFailure(str(path), "no such file")
    predictions: dict[str, list[Detection]] = {}
    for line_no, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 7:
            raise MalformedAnnotation(str(path), line_no,
                                      f"expected 7 fields, got {len(parts)}")
        image_id, label = parts[0], parts[1]
        try:
            conf = float(parts[2])
            x0, y0, x1, y1 = (float(p) for p in parts[3:])
            det = Detection(BBox(x0, y0, x1, y1), conf, label)
        except ValueError as exc:
            raise MalformedAnnotation(str(path), line_no, str(exc)) from None
        predictions.setdefault(image_id, []).append(det)
    return predictions
