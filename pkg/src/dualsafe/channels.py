"""Per-frame detection records of the two dissimilar channels.

Channels are replayed from line-oriented fixture files rather than run live.
Each non-comment line is a flat JSON object::

    {"frame": 3, "channel": "A", "class": "hold", "bbox": [x0, y0, x1, y1], "confidence": 0.97}

Channel ``A`` is the pass-through source, channel ``B`` the check channel.

Random generation uses numpy's ``PCG64`` bit generator seeded with the
64-bit ``seed`` (``numpy.random.Generator(numpy.random.PCG64(seed))``); the
stream is stable across numpy releases for a given seed.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .calibration import BetaParams, beta_quantile
from .geometry import BoundingBox

CHANNELS = ("A", "B")
_DETECTION_KEYS = {"frame", "channel", "class", "bbox", "confidence"}


class FixtureError(ValueError):
    """Malformed fixture file; carries the offending line number."""

    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


@dataclass(frozen=True)
class Detection:
    bbox: BoundingBox
    label: str
    confidence: float = 1.0

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label:
            raise ValueError("sign class must be a non-empty string")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class FrameRecord:
    frame_id: int
    detections_a: tuple[Detection, ...] = field(default_factory=tuple)
    detections_b: tuple[Detection, ...] = field(default_factory=tuple)

    def channel(self, name: str) -> tuple[Detection, ...]:
        if name == "A":
            return self.detections_a
        if name == "B":
            return self.detections_b
        raise ValueError(f"unknown channel {name!r}")


def _reject_constant(token):
    raise ValueError(f"{token} is not an accepted number")


def iter_json_lines(path) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, object)`` for every record line of a fixture."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line, parse_constant=_reject_constant)
            except ValueError as exc:
                raise FixtureError(path, lineno, f"invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise FixtureError(path, lineno, "record must be a JSON object")
            yield lineno, obj


def _number(path, lineno, value, what) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FixtureError(path, lineno, f"{what} must be a number")
    if not math.isfinite(value):
        raise FixtureError(path, lineno, f"{what} must be finite")
    return float(value)


def parse_frame_id(path, lineno, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FixtureError(path, lineno, "frame must be an integer")
    return value


def parse_box(path, lineno, value) -> BoundingBox:
    if not isinstance(value, list) or len(value) != 4:
        raise FixtureError(path, lineno, "bbox must be a list of 4 numbers")
    coords = [_number(path, lineno, v, "bbox coordinate") for v in value]
    try:
        return BoundingBox(*coords)
    except ValueError as exc:
        raise FixtureError(path, lineno, str(exc)) from None


def parse_label(path, lineno, value) -> str:
    if not isinstance(value, str) or not value:
        raise FixtureError(path, lineno, "class must be a non-empty string")
    return value


def load_detections(paths) -> list[FrameRecord]:
    """Load one or more detection fixtures into frame records sorted by frame id.

    Detections keep their file order within a frame and channel. A frame seen
    on only one channel gets an empty list for the other.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    per_frame: dict[int, dict[str, list[Detection]]] = defaultdict(lambda: {"A": [], "B": []})
    # detections are indexed by position, so a (frame, channel) stream may
    # come from one file only; a second source would duplicate its indices
    owner: dict[tuple[int, str], str] = {}
    for path in paths:
        for lineno, obj in iter_json_lines(path):
            keys = set(obj)
            if keys != _DETECTION_KEYS:
                missing = sorted(_DETECTION_KEYS - keys)
                extra = sorted(keys - _DETECTION_KEYS)
                raise FixtureError(path, lineno, f"bad fields (missing {missing}, unexpected {extra})")
            frame = parse_frame_id(path, lineno, obj["frame"])
            channel = obj["channel"]
            if channel not in CHANNELS:
                raise FixtureError(path, lineno, f"channel must be 'A' or 'B', got {channel!r}")
            conf = _number(path, lineno, obj["confidence"], "confidence")
            if not (0.0 <= conf <= 1.0):
                raise FixtureError(path, lineno, f"confidence {conf} outside [0, 1]")
            src = owner.setdefault((frame, channel), str(path))
            if src != str(path):
                raise FixtureError(path, lineno, f"duplicate detections for frame {frame} channel {channel} (already in {src})")
            det = Detection(parse_box(path, lineno, obj["bbox"]), parse_label(path, lineno, obj["class"]), conf)
            per_frame[frame][channel].append(det)
    return [
        FrameRecord(fid, tuple(chans["A"]), tuple(chans["B"]))
        for fid, chans in sorted(per_frame.items())
    ]


def detection_record(frame_id: int, channel: str, det: Detection) -> dict:
    return {
        "frame": frame_id,
        "channel": channel,
        "class": det.label,
        "bbox": det.bbox.to_list(),
        "confidence": det.confidence,
    }


def dump_detections(frames: Iterable[FrameRecord], path, channels: Sequence[str] = CHANNELS) -> None:
    """Write frames in the fixture format (reloads to equal records)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame in frames:
            for ch in channels:
                for det in frame.channel(ch):
                    fh.write(json.dumps(detection_record(frame.frame_id, ch, det)) + "\n")


def iou_offset(target_iou: float) -> float:
    """Lateral shift of a unit square giving ``target_iou`` with the original.

    Overlap width ``w`` yields IoU ``w / (2 - w)``, so ``w = 2v / (1 + v)``
    and the shift is ``1 - w = (1 - v) / (1 + v)``.
    """
    return (1.0 - target_iou) / (1.0 + target_iou)


def box_pair_with_iou(target_iou: float) -> tuple[BoundingBox, BoundingBox]:
    if not (0.0 < target_iou <= 1.0):
        raise ValueError(f"target IoU must lie in (0, 1], got {target_iou}")
    a = BoundingBox(0.0, 0.0, 1.0, 1.0)
    return a, a.translated(iou_offset(target_iou), 0.0)


def open_unit_uniforms(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` uniforms strictly inside (0, 1) on the 2**-53 grid."""
    return (rng.integers(0, 2**53, size=n, dtype=np.int64) + 0.5) / 2.0**53


def sample_beta(params: BetaParams, n: int, seed: int) -> np.ndarray:
    """Inverse-CDF samples from ``Beta(alpha, beta)``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return beta_quantile(params, open_unit_uniforms(rng, n))


def synthesize_frames(
    params: BetaParams,
    n: int,
    seed: int,
    base_class: str = "hold",
    confidence: float = 1.0,
    start_frame: int = 0,
) -> list[FrameRecord]:
    """Frames whose channel-pair IoU follows ``Beta(alpha, beta)``.

    Channel A holds the unit square at the origin; channel B holds the same
    square shifted sideways so the pair's IoU equals the drawn sample.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    frames = []
    for i, v in enumerate(sample_beta(params, n, seed)):
        box_a, box_b = box_pair_with_iou(float(v))
        frames.append(
            FrameRecord(
                start_frame + i,
                (Detection(box_a, base_class, confidence),),
                (Detection(box_b, base_class, confidence),),
            )
        )
    return frames
