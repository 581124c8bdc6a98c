import json

import pytest

from dualsafe import pipeline
from dualsafe.cli import main
from dualsafe.compliance import load_objectives


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    return pipeline.write_demo(tmp_path_factory.mktemp("demo"), seed=0)


def _summary(out):
    return json.loads((out / "summary.json").read_text())


def test_demo_run_passes(demo, tmp_path):
    status = pipeline.run_pipeline(pipeline.RunConfig.from_file(demo), tmp_path)
    s = _summary(tmp_path)
    assert status == 0 and s["failures"] == []
    assert s["availability"] >= 0.95
    assert s["status_histogram"] == {"SATISFIED": 14, "MODEL_LEVEL": 4, "ARCH_MITIGATION": 5, "OUT_OF_SCOPE": 0}
    assert s["average_precision"] == 1.0
    for name in pipeline.ARTIFACTS.values():
        assert (tmp_path / name).exists(), name


def test_every_referenced_evidence_exists(demo, tmp_path):
    pipeline.run_pipeline(pipeline.RunConfig.from_file(demo), tmp_path)
    for o in load_objectives():
        for e in o.evidence:
            assert (tmp_path / e).exists()
    report = json.loads((tmp_path / "compliance_report.json").read_text())
    assert report["missing_evidence_rows"] == 0


def test_higher_availability_target_fails(demo, tmp_path):
    status = pipeline.run_pipeline(pipeline.RunConfig.from_file(demo, availability=0.999), tmp_path)
    s = _summary(tmp_path)
    assert status != 0 and s["availability"] < 0.999
    assert any("availability" in f for f in s["failures"])


def test_planted_duplicate_fails_a4(tmp_path):
    cfg = pipeline.write_demo(tmp_path / "in", seed=0, plant_duplicate=True)
    status = pipeline.run_pipeline(pipeline.RunConfig.from_file(cfg), tmp_path / "out")
    assert status != 0
    arch = {a["id"]: a["result"] for a in json.loads((tmp_path / "out" / "architecture.json").read_text())}
    assert arch["RSC-A4"] == "FAIL"
    ind = json.loads((tmp_path / "out" / "independence.json").read_text())
    assert ind["independent"] is False and len(ind["collisions"]) == 1


def test_parse_error_gives_summary(demo, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"frame": 0}\n')
    cfg = pipeline.RunConfig.from_file(demo)
    cfg.detections_b = str(bad)
    status = pipeline.run_pipeline(cfg, tmp_path / "out")
    s = _summary(tmp_path / "out")
    assert status == 2 and "bad.jsonl:1" in s["failures"][0]


def test_missing_channel_b_fails_a1(demo, tmp_path):
    cfg = pipeline.RunConfig.from_file(demo)
    cfg.detections_b = None
    assert pipeline.run_pipeline(cfg, tmp_path) != 0
    arch = {a["id"]: a["result"] for a in json.loads((tmp_path / "architecture.json").read_text())}
    assert arch["RSC-A1"] == "FAIL"


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        pipeline.RunConfig(availability=1.0)
    p = tmp_path / "c.json"
    p.write_text('{"nonsense": 1}')
    with pytest.raises(ValueError):
        pipeline.RunConfig.from_file(p)


def test_cli_run_and_determinism(demo, tmp_path, capsys):
    assert main(["run", "--config", str(demo), "--out", str(tmp_path / "o1")]) == 0
    assert main(["run", "--config", str(demo), "--out", str(tmp_path / "o2")]) == 0
    capsys.readouterr()
    names = sorted(p.name for p in (tmp_path / "o1").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "o2").iterdir())
    for n in names:
        assert (tmp_path / "o1" / n).read_bytes() == (tmp_path / "o2" / n).read_bytes()


def test_cli_stages(demo, tmp_path, capsys):
    d = demo.parent
    det = ["--detections", str(d / "detections_a.jsonl"), "--detections", str(d / "detections_b.jsonl")]

    assert main(["calibrate", *det, "--availability", "0.95", "--out", str(tmp_path / "cal.json")]) == 0
    cal = json.loads((tmp_path / "cal.json").read_text())
    assert len(cal["histogram"]["counts"]) == 20
    assert cal["reference_comparison"]["reference_threshold"] == 0.32
    tau = cal["result"]["threshold"]

    assert main(["monitor", *det, "--threshold", str(tau), "--report", str(tmp_path / "av.json")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2000 and json.loads(lines[0])["frame"] == 0
    assert json.loads((tmp_path / "av.json").read_text())["availability"] >= 0.95

    assert main(["evaluate", *det, "--channel", "B", "--truth", str(d / "truth.jsonl"), "--iou-min", "0.95"]) == 0
    ev = json.loads(capsys.readouterr().out)
    assert ev["average_precision"] == 1.0 and ev["min_confidence"] == 0.95

    ds_a, ds_b = str(d / "datasets" / "flightgear"), str(d / "datasets" / "xplane")
    assert main(["trace", "build", "--root", ds_a, "--out", str(tmp_path / "m.txt")]) == 0
    assert main(["trace", "matrix", "--manifest", str(tmp_path / "m.txt")]) == 0
    matrix = json.loads(capsys.readouterr().out)
    assert set(matrix["requirements"]) >= {"KSFO", "SNOW"}
    assert main(["trace", "coverage", "--manifest", ds_a, "--format", "text"]) == 0
    assert "SNOW" in capsys.readouterr().out
    assert main(["trace", "independence", "--a", ds_a, "--b", ds_b]) == 0
    assert json.loads(capsys.readouterr().out)["independent"] is True

    assert main(["comply", "report", "--objectives", "builtin", "--format", "text"]) == 0
    assert "TOTAL            23" in capsys.readouterr().out


def test_cli_bad_input(tmp_path, capsys):
    bad = tmp_path / "x.jsonl"
    bad.write_text("nope\n")
    assert main(["monitor", "--detections", str(bad), "--threshold", "0.3"]) == 2
    assert "x.jsonl:1" in capsys.readouterr().err
