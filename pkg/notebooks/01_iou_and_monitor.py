"""
Comparing two detection channels
================================

Two detectors look at the same frame. The monitor only lets channel A's
output through when both channels report the same signs at nearly the same
place.
"""

from dualsafe.channels import Detection, FrameRecord
from dualsafe.geometry import BoundingBox, iou
from dualsafe.monitor import MonitorConfig, decide

# Two 2x2 boxes overlapping by half their width share a third of their union.
a = BoundingBox(0, 0, 2, 2)
b = BoundingBox(1, 0, 3, 2)
print("IoU:", iou(a, b))

# Touching edges do not count as overlap.
print("edge contact:", iou(a, BoundingBox(2, 0, 4, 2)))

###############################################################################
# The same pair of boxes is accepted or rejected depending on the threshold.

frame = FrameRecord(0, (Detection(a, "hold", 0.97),), (Detection(b, "hold", 0.91),))
for tau in (0.32, 0.34):
    d = decide(frame, MonitorConfig(tau))
    print(f"tau={tau}: {d.reason.value:<20} valid={d.valid} output={len(d.output)}")

###############################################################################
# A class disagreement is caught before any overlap is looked at.

clash = FrameRecord(1, (Detection(a, "hold"),), (Detection(a, "rwy-dist"),))
print(decide(clash, MonitorConfig(0.32)).reason.value)

# Frames where neither channel sees anything are valid, with nothing to output.
print(decide(FrameRecord(2), MonitorConfig(0.32)).reason.value)
