"""Assurance tooling for a perception function built from two dissimilar detectors.

A safety monitor passes channel A's detections through only when channel B
agrees (same count, same classes, IoU at or above a threshold). The
threshold comes from a Beta fit of the observed inter-channel IoU. Around it
sit detector evaluation, dataset traceability and independence checks, and a
certification-objective compliance report.
"""

from .calibration import (
    BetaParams,
    CalibrationResult,
    DegenerateSample,
    beta_cdf,
    beta_quantile,
    calibrate_threshold,
    fit_beta_mom,
)
from .channels import Detection, FrameRecord, load_detections, synthesize_frames
from .geometry import BoundingBox, area, iou
from .monitor import AvailabilityReport, MonitorConfig, MonitorDecision, Reason, decide, run_monitor

__version__ = "0.1.0"
