"""Command-line front end.

    dualsafe calibrate --detections FILE [--detections FILE] --availability 0.95 [--out FILE]
    dualsafe monitor --detections FILE --threshold 0.39 [--report FILE]
    dualsafe evaluate --detections FILE --channel B --truth FILE [--iou-min 0.5]
    dualsafe trace build|matrix|coverage|independence ...
    dualsafe comply report --objectives builtin --evidence DIR [--format text]
    dualsafe run --config run.json --out DIR
    dualsafe demo DIR

Exit status: 0 success, 1 a check failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import calibration, channels, compliance, datatrace, evaluation, monitor, pipeline


def _emit(obj, out=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_calibrate(args) -> int:
    frames = channels.load_detections(args.detections)
    samples = monitor.pair_iou_samples(frames)
    result = calibration.calibrate_threshold(samples, args.availability)
    _emit(
        {
            "result": result.to_dict(),
            "histogram": calibration.iou_histogram(samples),
            "reference_comparison": calibration.reference_comparison(result),
        },
        args.out,
    )
    return 0


def cmd_monitor(args) -> int:
    frames = channels.load_detections(args.detections)
    cfg = monitor.MonitorConfig(args.threshold, require_class_match=not args.ignore_class)
    decisions, report = monitor.run_monitor(frames, cfg)
    for d in decisions:
        sys.stdout.write(json.dumps(d.to_dict(), sort_keys=True) + "\n")
    if args.report:
        _emit(report.to_dict(), args.report)
    return 0


def cmd_evaluate(args) -> int:
    frames = channels.load_detections(args.detections)
    truth = evaluation.load_truth(args.truth)
    min_conf = args.iou_min if args.min_confidence is None else args.min_confidence
    _emit(evaluation.evaluate_channel(frames, truth, args.channel, args.iou_min, min_conf), args.out)
    return 0


def _load_manifest(path_or_dir):
    if os.path.isdir(path_or_dir):
        return datatrace.build_manifest(path_or_dir)
    return datatrace.read_manifest(path_or_dir)


def cmd_trace(args) -> int:
    if args.trace_cmd == "build":
        items = datatrace.build_manifest(args.root)
        text = datatrace.format_manifest(items)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    if args.trace_cmd == "independence":
        collisions = datatrace.check_independence(_load_manifest(args.a), _load_manifest(args.b))
        _emit({"independent": not collisions, "collisions": [c.to_dict() for c in collisions]}, args.out)
        return 1 if collisions else 0

    catalog = datatrace.load_catalog(args.catalog)
    matrix, report = datatrace.trace(catalog, _load_manifest(args.manifest))
    if args.trace_cmd == "matrix":
        _emit(matrix.to_dict(), args.out)
    elif args.format == "text":
        sys.stdout.write(datatrace.format_histogram(report.counts))
        if report.uncovered:
            sys.stdout.write("uncovered: " + ", ".join(report.uncovered) + "\n")
        if report.untraced_tags:
            sys.stdout.write("untraced tags: " + ", ".join(report.untraced_tags) + "\n")
    else:
        _emit(report.to_dict(), args.out)
    return 0


def cmd_comply(args) -> int:
    objectives = compliance.load_objectives(args.objectives)
    assertions = []
    if args.architecture:
        with open(args.architecture, encoding="utf-8") as fh:
            assertions = [
                compliance.ArchAssertion(a["id"], a["description"], compliance.Result(a["result"]), a.get("detail", ""))
                for a in json.load(fh)
            ]
    doc = compliance.compliance_report(objectives, assertions, args.evidence)
    if args.format == "text":
        sys.stdout.write(compliance.report_text(doc))
    else:
        sys.stdout.write(compliance.report_json(doc))
    return 0


def cmd_run(args) -> int:
    overrides = {"availability": args.availability, "seed": args.seed}
    if args.config:
        cfg = pipeline.RunConfig.from_file(args.config, **overrides)
    else:
        cfg = pipeline.RunConfig(
            detections_a=args.detections_a,
            detections_b=args.detections_b,
            truth=args.truth,
            dataset_a=args.dataset_a,
            dataset_b=args.dataset_b,
            **{k: v for k, v in overrides.items() if v is not None},
        )
    status = pipeline.run_pipeline(cfg, args.out)
    with open(f"{args.out}/{pipeline.ARTIFACTS['summary']}", encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return status


def cmd_demo(args) -> int:
    path = pipeline.write_demo(args.dir, seed=args.seed, plant_duplicate=args.plant_duplicate)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualsafe", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", help="fit a Beta to pair IoUs and pick the monitor threshold")
    c.add_argument("--detections", action="append", required=True)
    c.add_argument("--availability", type=float, default=0.95)
    c.add_argument("--out")
    c.set_defaults(func=cmd_calibrate)

    m = sub.add_parser("monitor", help="replay detections through the safety monitor")
    m.add_argument("--detections", action="append", required=True)
    m.add_argument("--threshold", type=float, required=True)
    m.add_argument("--ignore-class", action="store_true")
    m.add_argument("--report")
    m.set_defaults(func=cmd_monitor)

    e = sub.add_parser("evaluate", help="precision/recall and AP of one channel")
    e.add_argument("--detections", action="append", required=True)
    e.add_argument("--channel", choices=channels.CHANNELS, default="B")
    e.add_argument("--truth", required=True)
    e.add_argument("--iou-min", type=float, default=0.5)
    e.add_argument("--min-confidence", type=float, help="defaults to the --iou-min value")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    t = sub.add_parser("trace", help="dataset manifests and requirement traceability")
    tsub = t.add_subparsers(dest="trace_cmd", required=True)
    tb = tsub.add_parser("build")
    tb.add_argument("--root", required=True)
    tb.add_argument("--out")
    for name in ("matrix", "coverage"):
        tp = tsub.add_parser(name)
        tp.add_argument("--catalog", default="builtin")
        tp.add_argument("--manifest", required=True, help="manifest file or dataset directory")
        tp.add_argument("--out")
        tp.add_argument("--format", choices=("json", "text"), default="json")
    ti = tsub.add_parser("independence")
    ti.add_argument("--a", required=True, help="manifest file or dataset directory")
    ti.add_argument("--b", required=True, help="manifest file or dataset directory")
    ti.add_argument("--out")
    t.set_defaults(func=cmd_trace)

    co = sub.add_parser("comply", help="certification objective compliance report")
    cosub = co.add_subparsers(dest="comply_cmd", required=True)
    cr = cosub.add_parser("report")
    cr.add_argument("--objectives", default="builtin")
    cr.add_argument("--evidence")
    cr.add_argument("--architecture", help="architecture.json from a run")
    cr.add_argument("--format", choices=("json", "text"), default="json")
    co.set_defaults(func=cmd_comply)

    r = sub.add_parser("run", help="full assurance pipeline")
    r.add_argument("--config")
    r.add_argument("--detections-a")
    r.add_argument("--detections-b")
    r.add_argument("--truth")
    r.add_argument("--dataset-a")
    r.add_argument("--dataset-b")
    r.add_argument("--availability", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("demo", help="write deterministic demo inputs")
    d.add_argument("dir")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--plant-duplicate", action="store_true")
    d.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
