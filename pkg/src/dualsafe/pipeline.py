"""End-to-end assurance run: calibrate, replay through the monitor, evaluate,
trace datasets, check independence and assemble the compliance report.

Every artifact is written under one output directory with a fixed name;
identical inputs give byte-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import calibration, channels, compliance, datatrace, evaluation, monitor
from .calibration import BetaParams, beta_quantile
from .channels import Detection, FrameRecord
from .geometry import BoundingBox

log = logging.getLogger(__name__)

ARTIFACTS = {
    "config": "run_config.json",
    "calibration": "calibration.json",
    "decisions": "monitor_decisions.jsonl",
    "availability": "availability.json",
    "evaluation": "evaluation.json",
    "manifest_a": "manifest_a.txt",
    "manifest_b": "manifest_b.txt",
    "trace_matrix": "trace_matrix.json",
    "coverage": "coverage.json",
    "independence": "independence.json",
    "architecture": "architecture.json",
    "report_json": "compliance_report.json",
    "report_text": "compliance_report.txt",
    "summary": "summary.json",
}


@dataclass
class RunConfig:
    detections_a: str | None = None
    detections_b: str | None = None
    truth: str | None = None
    availability: float = 0.95
    iou_min: float = 0.5
    min_confidence: float | None = None
    eval_channel: str = "B"
    requirements: str = "builtin"
    objectives: str = "builtin"
    dataset_a: str | None = None
    dataset_b: str | None = None
    attestations: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.availability < 1.0):
            raise ValueError(f"availability must lie in (0, 1), got {self.availability}")
        if self.eval_channel not in channels.CHANNELS:
            raise ValueError(f"eval channel must be A or B, got {self.eval_channel!r}")

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        """Load a JSON config; relative paths resolve against its directory."""
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        for key in ("detections_a", "detections_b", "truth", "dataset_a", "dataset_b", "requirements", "objectives"):
            v = data.get(key)
            if v and v != "builtin" and not Path(v).is_absolute():
                data[key] = str(path.parent / v)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def run_pipeline(cfg: RunConfig, out_dir) -> int:
    """Run every stage and return the exit status (0 only on a full pass).

    Input errors still produce ``summary.json`` with the failure reason.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    failures: list[str] = []
    summary: dict = {"failures": failures}
    try:
        status = _run(cfg, out, summary)
    except (ValueError, OSError) as exc:
        log.error("pipeline aborted: %s", exc)
        failures.append(f"input error: {exc}")
        status = 2
    summary["exit_status"] = status
    _dump_json(out / ARTIFACTS["summary"], summary)
    return status


def _run(cfg: RunConfig, out: Path, summary: dict) -> int:
    failures = summary["failures"]
    _dump_json(out / ARTIFACTS["config"], cfg.to_dict())

    sources = [p for p in (cfg.detections_a, cfg.detections_b) if p]
    if not sources:
        raise ValueError("no detection fixtures configured")
    frames = channels.load_detections(list(dict.fromkeys(sources)))
    seen = frozenset(ch for f in frames for ch in channels.CHANNELS if f.channel(ch))

    samples = monitor.pair_iou_samples(frames)
    threshold = None
    try:
        cal = calibration.calibrate_threshold(samples, cfg.availability)
    except calibration.DegenerateSample as exc:
        failures.append(f"calibration failed: {exc}")
    else:
        threshold = cal.threshold
        _dump_json(
            out / ARTIFACTS["calibration"],
            {
                "result": cal.to_dict(),
                "histogram": calibration.iou_histogram(samples),
                "reference_comparison": calibration.reference_comparison(cal),
            },
        )
        log.info("calibrated threshold %.6f from %d samples", threshold, cal.n_samples)

    if threshold is not None:
        decisions, report = monitor.run_monitor(frames, monitor.MonitorConfig(threshold))
        with open(out / ARTIFACTS["decisions"], "w", encoding="utf-8", newline="\n") as fh:
            for d in decisions:
                fh.write(json.dumps(d.to_dict(), sort_keys=True) + "\n")
        avail = report.to_dict()
        avail.update({"threshold": threshold, "target_availability": cfg.availability})
        _dump_json(out / ARTIFACTS["availability"], avail)
        summary["availability"] = report.availability
        summary["threshold"] = threshold
        if report.availability < cfg.availability:
            failures.append(f"availability {report.availability:.6f} below target {cfg.availability}")

    if cfg.truth:
        truth = evaluation.load_truth(cfg.truth)
        min_conf = cfg.iou_min if cfg.min_confidence is None else cfg.min_confidence
        ev = evaluation.evaluate_channel(frames, truth, cfg.eval_channel, cfg.iou_min, min_conf)
        _dump_json(out / ARTIFACTS["evaluation"], ev)
        summary["average_precision"] = ev["average_precision"]

    catalog = datatrace.load_catalog(cfg.requirements)
    manifests = {}
    for label, root in (("a", cfg.dataset_a), ("b", cfg.dataset_b)):
        if root:
            manifests[label] = datatrace.build_manifest(root)
            datatrace.write_manifest(manifests[label], out / ARTIFACTS[f"manifest_{label}"])
    if manifests:
        matrices, coverages = {}, {}
        for label, items in manifests.items():
            matrix, cov = datatrace.trace(catalog, items)
            matrices[label.upper()] = matrix.to_dict()
            coverages[label.upper()] = cov.to_dict()
        _dump_json(out / ARTIFACTS["trace_matrix"], matrices)
        _dump_json(out / ARTIFACTS["coverage"], coverages)

    collisions = None
    if "a" in manifests and "b" in manifests:
        collisions = datatrace.check_independence(manifests["a"], manifests["b"])
        _dump_json(
            out / ARTIFACTS["independence"],
            {"independent": not collisions, "collisions": [c.to_dict() for c in collisions]},
        )

    arch_cfg = compliance.ArchConfig(
        channel_a_source=cfg.detections_a,
        channel_b_source=cfg.detections_b,
        channels_seen=seen,
        monitor_threshold=threshold,
        monitor_executed=threshold is not None,
        attestations=cfg.attestations,
    )
    assertions = compliance.check_architecture(arch_cfg, collisions)
    _dump_json(out / ARTIFACTS["architecture"], [a.to_dict() for a in assertions])
    for a in assertions:
        if a.result is compliance.Result.FAIL:
            failures.append(f"{a.id} FAIL: {a.detail}")

    objectives = compliance.load_objectives(cfg.objectives)
    doc = compliance.compliance_report(objectives, assertions, out)
    (out / ARTIFACTS["report_json"]).write_text(compliance.report_json(doc), encoding="utf-8", newline="\n")
    (out / ARTIFACTS["report_text"]).write_text(compliance.report_text(doc), encoding="utf-8", newline="\n")
    summary["status_histogram"] = doc["status_histogram"]
    summary["missing_evidence_rows"] = doc["missing_evidence_rows"]

    return 1 if failures else 0


# -- demo fixtures ---------------------------------------------------------

DEMO_PARAMS = BetaParams(5.88, 3.01)
# tight cluster of near-identical boxes, as when both channels lock on
DEMO_AGREEMENT_PARAMS = BetaParams(40.0, 2.0)


def _scaled(box: BoundingBox, scale: float, dx: float, dy: float) -> BoundingBox:
    return BoundingBox(box.x_min * scale + dx, box.y_min * scale + dy, box.x_max * scale + dx, box.y_max * scale + dy)


def demo_frames(
    seed: int = 0,
    n: int = 2000,
    agreement_fraction: float = 0.2,
    n_class_faults: int = 5,
    n_missed: int = 5,
) -> list[FrameRecord]:
    """Replay with realistic channel divergence plus a few channel-A faults."""
    rng = np.random.Generator(np.random.PCG64(seed))
    u = channels.open_unit_uniforms(rng, n)
    tight = rng.random(n) < agreement_fraction
    ious = beta_quantile(DEMO_PARAMS, u)
    if tight.any():
        ious[tight] = beta_quantile(DEMO_AGREEMENT_PARAMS, u[tight])
    labels = ("hold-short", "runway-id", "taxiway", "location")
    cls = rng.integers(0, len(labels), size=n)
    # channel B scores stay at or above 0.95 so it also passes evaluation at
    # a 95% confidence cutoff
    conf = np.round(np.array([0.80, 0.95]) + np.array([0.20, 0.05]) * rng.random((n, 2)), 6)
    scale = rng.uniform(40.0, 90.0, size=n)
    origin = rng.uniform(0.0, 500.0, size=(n, 2))

    fault_ids = rng.choice(n, size=n_class_faults + n_missed, replace=False)
    class_fault = set(int(i) for i in fault_ids[:n_class_faults])
    missed = set(int(i) for i in fault_ids[n_class_faults:])

    frames = []
    for i in range(n):
        unit_a, unit_b = channels.box_pair_with_iou(float(ious[i]))
        s, (dx, dy) = float(scale[i]), origin[i]
        box_a = _scaled(unit_a, s, float(dx), float(dy))
        box_b = _scaled(unit_b, s, float(dx), float(dy))
        label = labels[cls[i]]
        label_a = labels[(cls[i] + 1) % len(labels)] if i in class_fault else label
        det_a = () if i in missed else (Detection(box_a, label_a, float(conf[i, 0])),)
        det_b = (Detection(box_b, label, float(conf[i, 1])),)
        frames.append(FrameRecord(i, det_a, det_b))
    return frames


def _demo_dataset(root: Path, name: str, catalog, n_items: int, rng: np.random.Generator) -> None:
    groups = datatrace.by_dimension(catalog)
    root.mkdir(parents=True, exist_ok=True)
    for k in range(n_items):
        path = root / f"img_{k:03d}.png"
        path.write_bytes(name.encode() + b":" + rng.bytes(64))
        # cycle through each dimension so every requirement gets covered
        tags = [reqs[k % len(reqs)].id for reqs in groups.values()]
        (root / f"img_{k:03d}.png.tags").write_text("\n".join(tags) + "\n", encoding="utf-8")


def write_demo(out_dir, seed: int = 0, plant_duplicate: bool = False) -> Path:
    """Write a complete, passing demo input set and return its config path.

    With ``plant_duplicate`` one image of dataset A is copied into dataset B,
    which the independence check must catch.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames = demo_frames(seed)
    channels.dump_detections(frames, out / "detections_a.jsonl", channels=("A",))
    channels.dump_detections(frames, out / "detections_b.jsonl", channels=("B",))
    with open(out / "truth.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for f in frames:
            for d in f.detections_b:
                fh.write(json.dumps({"frame": f.frame_id, "class": d.label, "bbox": d.bbox.to_list()}) + "\n")

    rng = np.random.Generator(np.random.PCG64(seed + 1))
    catalog = datatrace.builtin_catalog()
    _demo_dataset(out / "datasets" / "flightgear", "flightgear", catalog, 24, rng)
    _demo_dataset(out / "datasets" / "xplane", "xplane", catalog, 36, rng)
    if plant_duplicate:
        src = out / "datasets" / "flightgear" / "img_000.png"
        (out / "datasets" / "xplane" / "leaked.png").write_bytes(src.read_bytes())

    config = {
        "detections_a": "detections_a.jsonl",
        "detections_b": "detections_b.jsonl",
        "truth": "truth.jsonl",
        "availability": 0.95,
        "iou_min": 0.5,
        "eval_channel": "B",
        "requirements": "builtin",
        "objectives": "builtin",
        "dataset_a": "datasets/flightgear",
        "dataset_b": "datasets/xplane",
        "attestations": {
            "RSC-A3": "single-stage vs two-stage detector, different backbones",
            "RSC-A5": "channel A in MATLAB, channel B in Python",
            "RSC-A6": "channels hosted on different processor boards",
            "RSC-A7": "separate implementation teams",
            "RSC-A8": "separate verification teams",
        },
        "seed": seed,
    }
    cfg_path = out / "run.json"
    _dump_json(cfg_path, config)
    return cfg_path
