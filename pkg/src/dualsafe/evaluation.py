"""Precision/recall and average precision of one channel against ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .channels import Detection, FixtureError, iter_json_lines, parse_box, parse_frame_id, parse_label
from .geometry import BoundingBox, iou

Annotation = tuple[BoundingBox, str]

_TRUTH_KEYS = {"frame", "class", "bbox"}


class MatchCounts(NamedTuple):
    true_positives: int
    false_positives: int
    false_negatives: int


@dataclass(frozen=True)
class GroundTruthRecord:
    frame_id: int
    annotations: tuple[Annotation, ...] = ()


@dataclass(frozen=True)
class PRPoint:
    confidence_cutoff: float
    precision: float
    recall: float

    def to_dict(self) -> dict:
        return {"confidence_cutoff": self.confidence_cutoff, "precision": self.precision, "recall": self.recall}


def load_truth(path) -> list[GroundTruthRecord]:
    """Read a ground-truth fixture (detections format without channel/confidence)."""
    frames: dict[int, list[Annotation]] = {}
    for lineno, obj in iter_json_lines(path):
        if set(obj) != _TRUTH_KEYS:
            raise FixtureError(path, lineno, f"ground truth needs exactly the fields {sorted(_TRUTH_KEYS)}")
        fid = parse_frame_id(path, lineno, obj["frame"])
        frames.setdefault(fid, []).append((parse_box(path, lineno, obj["bbox"]), parse_label(path, lineno, obj["class"])))
    return [GroundTruthRecord(fid, tuple(ann)) for fid, ann in sorted(frames.items())]


def confidence_order(preds: Sequence[Detection]) -> list[int]:
    # stable: equal confidences keep input order
    return sorted(range(len(preds)), key=lambda i: -preds[i].confidence)


def match_flags(preds: Sequence[Detection], truth: Sequence[Annotation], iou_min: float) -> list[bool]:
    """True-positive flag for each prediction, in input order.

    Predictions are visited by descending confidence; each claims the
    still-unmatched same-class truth with the highest IoU >= ``iou_min``
    (ties to the lower truth index).
    """
    if not (0.0 < iou_min <= 1.0):
        raise ValueError(f"iou_min must lie in (0, 1], got {iou_min}")
    taken = [False] * len(truth)
    flags = [False] * len(preds)
    for i in confidence_order(preds):
        p = preds[i]
        best, best_iou = -1, -1.0
        for j, (box, label) in enumerate(truth):
            if taken[j] or label != p.label:
                continue
            v = iou(p.bbox, box)
            if v >= iou_min and v > best_iou:
                best, best_iou = j, v
        if best >= 0:
            taken[best] = True
            flags[i] = True
    return flags


def match_predictions(preds: Sequence[Detection], truth: Sequence[Annotation], iou_min: float = 0.5) -> MatchCounts:
    flags = match_flags(preds, truth, iou_min)
    tp = sum(flags)
    return MatchCounts(tp, len(preds) - tp, len(truth) - tp)


def pr_curve(
    preds: Mapping[int, Sequence[Detection]],
    truth: Mapping[int, Sequence[Annotation]],
    iou_min: float = 0.5,
) -> list[PRPoint]:
    """One PR point per distinct confidence, sweeping the cutoff downwards.

    ``preds`` and ``truth`` map frame id to that frame's detections and
    annotations. Matching is done once per frame: with confidence-ordered
    greedy matching a prediction's outcome only depends on the predictions
    ranked above it, so the flags hold at every cutoff.
    """
    scored = []
    for fid in sorted(set(preds) | set(truth)):
        p = list(preds.get(fid, ()))
        flags = match_flags(p, list(truth.get(fid, ())), iou_min)
        scored.extend((d.confidence, f) for d, f in zip(p, flags))
    n_truth = sum(len(t) for t in truth.values())
    scored.sort(key=lambda t: -t[0])

    points, tp, fp, k = [], 0, 0, 0
    while k < len(scored):
        cutoff = scored[k][0]
        while k < len(scored) and scored[k][0] == cutoff:
            tp += scored[k][1]
            fp += not scored[k][1]
            k += 1
        precision = tp / (tp + fp)
        recall = tp / n_truth if n_truth else 1.0
        points.append(PRPoint(cutoff, precision, recall))
    return points


def average_precision(curve: Sequence[PRPoint]) -> float:
    """Area under the all-points interpolated PR curve.

    Precision at recall ``r`` is taken as the best precision reached at any
    recall >= ``r``.
    """
    if not curve:
        return 0.0
    pts = sorted(curve, key=lambda p: p.recall)
    envelope = [p.precision for p in pts]
    for k in range(len(envelope) - 2, -1, -1):
        envelope[k] = max(envelope[k], envelope[k + 1])
    ap, prev_recall = 0.0, 0.0
    for p, prec in zip(pts, envelope):
        ap += (p.recall - prev_recall) * prec
        prev_recall = p.recall
    return ap


def evaluate_channel(
    frames,
    truth_records: Sequence[GroundTruthRecord],
    channel: str,
    iou_min: float = 0.5,
    min_confidence: float = 0.0,
) -> dict:
    """PR curve, AP and totals of one channel over a replay.

    Predictions below ``min_confidence`` are dropped before matching.
    """
    preds = {
        f.frame_id: tuple(d for d in f.channel(channel) if d.confidence >= min_confidence)
        for f in frames
    }
    truth = {r.frame_id: r.annotations for r in truth_records}
    curve = pr_curve(preds, truth, iou_min)
    totals = MatchCounts(0, 0, 0)
    for fid in sorted(set(preds) | set(truth)):
        c = match_predictions(list(preds.get(fid, ())), list(truth.get(fid, ())), iou_min)
        totals = MatchCounts(*(x + y for x, y in zip(totals, c)))
    return {
        "channel": channel,
        "iou_min": iou_min,
        "min_confidence": min_confidence,
        "true_positives": totals.true_positives,
        "false_positives": totals.false_positives,
        "false_negatives": totals.false_negatives,
        "average_precision": average_precision(curve),
        "pr_curve": [p.to_dict() for p in curve],
    }
