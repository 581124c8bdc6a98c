"""Safety monitor comparing the two channels frame by frame.

Channel A's detections are passed through only when channel B agrees on
the number of detections, on every matched sign class, and on box overlap
(IoU at or above the configured threshold). Otherwise the frame is
inhibited: the validity flag is false and nothing is emitted.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .channels import Detection, FrameRecord, detection_record
from .geometry import iou


class Reason(str, enum.Enum):
    AGREE = "AGREE"
    AGREE_EMPTY = "AGREE_EMPTY"
    CLASS_MISMATCH = "CLASS_MISMATCH"
    IOU_BELOW_THRESHOLD = "IOU_BELOW_THRESHOLD"
    CARDINALITY_MISMATCH = "CARDINALITY_MISMATCH"


VALID_REASONS = frozenset({Reason.AGREE, Reason.AGREE_EMPTY})


@dataclass(frozen=True)
class MonitorConfig:
    iou_threshold: float
    require_class_match: bool = True

    def __post_init__(self):
        if not (0.0 <= self.iou_threshold <= 1.0):
            raise ValueError(f"IoU threshold must lie in [0, 1], got {self.iou_threshold}")


@dataclass(frozen=True)
class MonitorDecision:
    frame_id: int
    valid: bool
    reason: Reason
    output: tuple[Detection, ...] = ()
    matched_pairs: tuple[tuple[int, int, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "frame": self.frame_id,
            "valid": self.valid,
            "reason": self.reason.value,
            "output": [
                {k: v for k, v in detection_record(self.frame_id, "A", d).items() if k not in ("frame", "channel")}
                for d in self.output
            ],
            "matched_pairs": [[i, j, v] for i, j, v in self.matched_pairs],
        }


@dataclass(frozen=True)
class AvailabilityReport:
    total_frames: int
    valid_frames: int
    reasons: dict = field(default_factory=dict)

    @property
    def availability(self) -> float:
        # no frame demanded means none was inhibited
        if self.total_frames == 0:
            return 1.0
        return self.valid_frames / self.total_frames

    def to_dict(self) -> dict:
        return {
            "total_frames": self.total_frames,
            "valid_frames": self.valid_frames,
            "availability": self.availability,
            "reasons": {r.value: int(self.reasons.get(r.value, 0)) for r in Reason},
        }


def greedy_match(a: Sequence[Detection], b: Sequence[Detection]) -> list[tuple[int, int, float]]:
    """Pair detections across channels in descending IoU order.

    Each detection is used at most once; ties go to the lower ``(i, j)``.
    Pairs come back in the order they were chosen.
    """
    candidates = sorted(
        ((iou(da.bbox, db.bbox), i, j) for i, da in enumerate(a) for j, db in enumerate(b)),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    used_a, used_b, pairs = set(), set(), []
    for v, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j, v))
    return pairs


def decide(frame: FrameRecord, cfg: MonitorConfig) -> MonitorDecision:
    a, b = frame.detections_a, frame.detections_b
    if not a and not b:
        return MonitorDecision(frame.frame_id, True, Reason.AGREE_EMPTY)
    if len(a) != len(b):
        return MonitorDecision(frame.frame_id, False, Reason.CARDINALITY_MISMATCH)
    pairs = tuple(greedy_match(a, b))
    if cfg.require_class_match and any(a[i].label != b[j].label for i, j, _ in pairs):
        return MonitorDecision(frame.frame_id, False, Reason.CLASS_MISMATCH, matched_pairs=pairs)
    if any(v < cfg.iou_threshold for _, _, v in pairs):
        return MonitorDecision(frame.frame_id, False, Reason.IOU_BELOW_THRESHOLD, matched_pairs=pairs)
    return MonitorDecision(frame.frame_id, True, Reason.AGREE, output=tuple(a), matched_pairs=pairs)


def summarize(decisions: Iterable[MonitorDecision]) -> AvailabilityReport:
    counts = Counter(d.reason.value for d in decisions)
    total = sum(counts.values())
    valid = sum(counts[r.value] for r in VALID_REASONS)
    return AvailabilityReport(total, valid, dict(counts))


def run_monitor(frames: Sequence[FrameRecord], cfg: MonitorConfig) -> tuple[list[MonitorDecision], AvailabilityReport]:
    decisions = [decide(f, cfg) for f in frames]
    return decisions, summarize(decisions)


def pair_iou_samples(frames: Iterable[FrameRecord]) -> list[float]:
    """Per-frame maximum IoU of matched channel pairs, ignoring the threshold.

    This is the divergence statistic used for calibration. Frames with
    unequal detection counts or no detections contribute nothing.
    """
    samples = []
    for f in frames:
        if not f.detections_a or len(f.detections_a) != len(f.detections_b):
            continue
        pairs = greedy_match(f.detections_a, f.detections_b)
        samples.append(max(v for _, _, v in pairs))
    return samples
