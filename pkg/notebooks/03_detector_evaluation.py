"""
Precision, recall and average precision
=======================================

One channel is scored against ground truth. Predictions are matched to
same-class truth boxes in order of confidence.
"""

from dualsafe.channels import Detection
from dualsafe.evaluation import average_precision, match_predictions, pr_curve
from dualsafe.geometry import BoundingBox

truth = {0: [(BoundingBox(0, 0, 10, 10), "hold"), (BoundingBox(20, 0, 30, 10), "hold")]}
preds = {
    0: [
        Detection(BoundingBox(0, 0, 10, 10), "hold", 0.9),
        Detection(BoundingBox(50, 50, 60, 60), "hold", 0.8),  # nothing there
        Detection(BoundingBox(20, 0, 30, 10), "hold", 0.6),
        Detection(BoundingBox(0, 0, 10, 10), "hold", 0.4),  # duplicate
    ]
}

print(match_predictions(preds[0], truth[0], 0.5))

curve = pr_curve(preds, truth, 0.5)
for p in curve:
    print(f"cutoff {p.confidence_cutoff:.1f}: precision {p.precision:.3f} recall {p.recall:.3f}")
print("AP:", average_precision(curve))

###############################################################################
# A strict 0.95 overlap requirement rejects boxes that are only slightly off.

shifted = {0: [Detection(BoundingBox(0.5, 0, 10.5, 10), "hold", 0.9)]}
print("AP at 0.5: ", average_precision(pr_curve(shifted, {0: truth[0][:1]}, 0.5)))
print("AP at 0.95:", average_precision(pr_curve(shifted, {0: truth[0][:1]}, 0.95)))
