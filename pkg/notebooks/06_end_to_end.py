"""
The whole pipeline on demo data
===============================

The demo writes two channels' detections, ground truth and two tagged
datasets. One run then calibrates, monitors, evaluates, traces and reports.
"""

import json
import tempfile
from pathlib import Path

from dualsafe import pipeline

work = Path(tempfile.mkdtemp())
cfg_path = pipeline.write_demo(work / "inputs", seed=0)

status = pipeline.run_pipeline(pipeline.RunConfig.from_file(cfg_path), work / "out")
summary = json.loads((work / "out" / "summary.json").read_text())
print("exit status", status)
print(json.dumps(summary, indent=2))

###############################################################################
# Asking for more availability than the channels deliver fails the gate.

status = pipeline.run_pipeline(pipeline.RunConfig.from_file(cfg_path, availability=0.999), work / "strict")
print("exit status", status)
print(json.loads((work / "strict" / "summary.json").read_text())["failures"])
