"""IoU, greedy matching, the precision/recall curve, and Average Precision."""
from aeroaug import BBox, Detection, average_precision, iou, match_detections, pr_curve

a = BBox(0, 0, 10, 10)
b = BBox(5, 0, 15, 10)
print(f"iou of half-overlapping squares: {iou(a, b):.4f}  (50/150)")

gts = [BBox(0, 0, 10, 10), BBox(30, 30, 42, 40)]
preds = [
    Detection(BBox(1, 0, 11, 10), 0.95),   # good hit
    Detection(BBox(60, 60, 70, 70), 0.80),  # false positive
    Detection(BBox(31, 30, 43, 40), 0.60),  # good hit, lower confidence
]
outcome = match_detections(preds, gts, iou_threshold=0.5)
print("tp flags in confidence order:", outcome.tp_flags,
      "missed ground truths:", outcome.fn_count)

curve = pr_curve(outcome, total_gt=len(gts))
for recall, precision in curve.points:
    print(f"  recall {recall:.2f}  precision {precision:.2f}")
print(f"average precision (all-points interpolation): "
      f"{average_precision(curve):.4f}")

for threshold in (0.2, 0.5, 0.7):
    ap = average_precision(
        pr_curve(match_detections(preds, gts, threshold), len(gts)))
    print(f"AP@{threshold}: {ap:.4f}")
print("stricter IoU thresholds can only lower AP")
