"""Axis-aligned bounding boxes and Intersection over Union."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in continuous image coordinates.

    Serialized everywhere as ``[x_min, y_min, x_max, y_max]``.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite box coordinates: {coords}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"box must have positive area: {coords}")

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "BoundingBox":
        if len(values) != 4:
            raise ValueError(f"bbox needs 4 coordinates, got {len(values)}")
        return cls(*(float(v) for v in values))

    def to_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    def translated(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    @property
    def area(self) -> float:
        return area(self)


def area(b: BoundingBox) -> float:
    return (b.x_max - b.x_min) * (b.y_max - b.y_min)


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over Union of two boxes.

    Boxes that are disjoint or only share an edge or corner give exactly 0.
    Identical boxes give exactly 1.
    """
    if a == b:
        return 1.0
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    union = area(a) + area(b) - inter
    # rounding can push inter/union a hair past 1 for nearly identical boxes
    return min(inter / union, 1.0)
