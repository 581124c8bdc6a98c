"""Certification objective catalog, architecture assertions and the compliance report.

Objective statuses are data: the tool reports what the catalog says and
whether the referenced evidence exists, it never judges compliance itself.
"""

from __future__ import annotations

import enum
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

BUILTIN = "builtin"
LEVELS = ("A", "B", "C", "D")


class Status(str, enum.Enum):
    SATISFIED = "SATISFIED"
    MODEL_LEVEL = "MODEL_LEVEL"
    ARCH_MITIGATION = "ARCH_MITIGATION"
    OUT_OF_SCOPE = "OUT_OF_SCOPE"


class Result(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    MANUAL = "MANUAL"


class ObjectiveCatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Objective:
    id: str
    title: str
    applicability: frozenset
    independence_at: frozenset
    status: Status
    rationale: str = ""
    evidence: tuple[str, ...] = ()


@dataclass(frozen=True)
class ArchAssertion:
    id: str
    description: str
    result: Result
    detail: str = ""

    def to_dict(self) -> dict:
        return {"id": self.id, "description": self.description, "result": self.result.value, "detail": self.detail}


ARCH_REQUIREMENTS = {
    "RSC-A1": "Two dissimilar detection channels run independently",
    "RSC-A2": "A safety monitor compares the channels and inhibits output outside tolerance",
    "RSC-A3": "The channels use dissimilar network architectures",
    "RSC-A4": "The channels are trained and tested on independent datasets",
    "RSC-A5": "The channels are implemented in different programming languages",
    "RSC-A6": "The channels run on dissimilar hardware",
    "RSC-A7": "The channels are implemented by different individuals",
    "RSC-A8": "The channels are verified by different individuals or groups",
}
MANUAL_REQUIREMENTS = ("RSC-A3", "RSC-A5", "RSC-A6", "RSC-A7", "RSC-A8")


@dataclass
class ArchConfig:
    """The slice of a run configuration the architecture checks look at."""

    channel_a_source: str | None = None
    channel_b_source: str | None = None
    channels_seen: frozenset = frozenset()
    monitor_threshold: float | None = None
    monitor_executed: bool = False
    attestations: Mapping[str, str] = field(default_factory=dict)


def _parse_levels(text: str, where: str) -> tuple[frozenset, frozenset]:
    applies, indep = set(), set()
    for token in filter(None, (t.strip() for t in text.split(","))):
        level, flag = token[0], token[1:]
        if level not in LEVELS or flag not in ("", "i"):
            raise ObjectiveCatalogError(f"{where}: bad applicability entry {token!r}")
        applies.add(level)
        if flag:
            indep.add(level)
    return frozenset(applies), frozenset(indep)


def parse_objectives(lines: Iterable[str], source: str = "<objectives>") -> list[Objective]:
    objectives, seen = [], set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        fields = [f.strip() for f in line.split("|")]
        if len(fields) < 5:
            raise ObjectiveCatalogError(f"{where}: expected id|status|applicability|title|rationale|evidence...")
        oid, status, levels, title, rationale, *evidence = fields
        if oid in seen:
            raise ObjectiveCatalogError(f"{where}: duplicate objective id {oid!r}")
        try:
            st = Status(status)
        except ValueError:
            raise ObjectiveCatalogError(f"{where}: unknown status {status!r}") from None
        applies, indep = _parse_levels(levels, where)
        seen.add(oid)
        objectives.append(Objective(oid, title, applies, indep, st, rationale, tuple(e for e in evidence if e)))
    return objectives


def load_objectives(path=BUILTIN) -> list[Objective]:
    if str(path) == BUILTIN:
        text = resources.files("dualsafe").joinpath("data/objectives_dal_c.txt").read_text(encoding="utf-8")
        return parse_objectives(text.splitlines(), "builtin")
    with open(path, encoding="utf-8") as fh:
        return parse_objectives(fh, str(path))


def objective_sort_key(oid: str):
    # natural order, so A-4#9 sorts before A-4#12
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", oid)]


def status_histogram(objectives: Sequence[Objective]) -> dict[str, int]:
    counts = Counter(o.status for o in objectives)
    return {s.value: counts.get(s, 0) for s in Status}


def check_architecture(cfg: ArchConfig, collisions: Sequence | None) -> list[ArchAssertion]:
    """Evaluate the machine-checkable architecture requirements.

    ``collisions`` is the result of the dataset independence check, or
    ``None`` when it was not run (which fails RSC-A4).
    """
    out = []
    a, b = cfg.channel_a_source, cfg.channel_b_source
    if not a or not b:
        out.append(ArchAssertion("RSC-A1", ARCH_REQUIREMENTS["RSC-A1"], Result.FAIL, "a channel source is not configured"))
    elif a == b:
        out.append(ArchAssertion("RSC-A1", ARCH_REQUIREMENTS["RSC-A1"], Result.FAIL, "both channels read the same source"))
    elif cfg.channels_seen and set(cfg.channels_seen) != {"A", "B"}:
        seen = ",".join(sorted(cfg.channels_seen))
        out.append(ArchAssertion("RSC-A1", ARCH_REQUIREMENTS["RSC-A1"], Result.FAIL, f"replay only contained channel(s) {seen}"))
    else:
        out.append(ArchAssertion("RSC-A1", ARCH_REQUIREMENTS["RSC-A1"], Result.PASS, f"A={a} B={b}"))

    if cfg.monitor_threshold is None or not cfg.monitor_executed:
        out.append(ArchAssertion("RSC-A2", ARCH_REQUIREMENTS["RSC-A2"], Result.FAIL, "monitor not configured or not executed"))
    else:
        out.append(ArchAssertion("RSC-A2", ARCH_REQUIREMENTS["RSC-A2"], Result.PASS, f"IoU threshold {cfg.monitor_threshold!r}"))

    if collisions is None:
        a4 = ArchAssertion("RSC-A4", ARCH_REQUIREMENTS["RSC-A4"], Result.FAIL, "independence check not run")
    elif collisions:
        a4 = ArchAssertion("RSC-A4", ARCH_REQUIREMENTS["RSC-A4"], Result.FAIL, f"{len(collisions)} shared content hash(es)")
    else:
        a4 = ArchAssertion("RSC-A4", ARCH_REQUIREMENTS["RSC-A4"], Result.PASS, "no shared content")
    out.append(a4)

    for rid in MANUAL_REQUIREMENTS:
        note = cfg.attestations.get(rid, "")
        out.append(ArchAssertion(rid, ARCH_REQUIREMENTS[rid], Result.MANUAL, note or "no attestation recorded"))
    return sorted(out, key=lambda x: objective_sort_key(x.id))


def compliance_report(
    objectives: Sequence[Objective],
    assertions: Sequence[ArchAssertion] = (),
    evidence_dir=None,
) -> dict:
    """Per-objective rows with evidence resolution, status histogram and assertions.

    Evidence paths are resolved relative to ``evidence_dir``; without one
    every referenced path is reported MISSING.
    """
    base = Path(evidence_dir) if evidence_dir is not None else None
    rows = []
    for o in sorted(objectives, key=lambda o: objective_sort_key(o.id)):
        missing = [e for e in o.evidence if base is None or not (base / e).exists()]
        rows.append(
            {
                "id": o.id,
                "title": o.title,
                "status": o.status.value,
                "applicability": [lv for lv in LEVELS if lv in o.applicability],
                "independence_at": [lv for lv in LEVELS if lv in o.independence_at],
                "rationale": o.rationale,
                "evidence": list(o.evidence),
                "missing_evidence": missing,
                "evidence_resolution": "MISSING" if missing else "FOUND",
            }
        )
    return {
        "objectives": rows,
        "status_histogram": status_histogram(objectives),
        "total": len(rows),
        "missing_evidence_rows": sum(r["evidence_resolution"] == "MISSING" for r in rows),
        "architecture": [a.to_dict() for a in assertions],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def report_text(report: dict) -> str:
    rows = report["objectives"]
    w_id = max([len("Objective")] + [len(r["id"]) for r in rows])
    w_st = max([len("Status")] + [len(r["status"]) for r in rows])
    lines = [f"{'Objective':<{w_id}}  {'Status':<{w_st}}  Levels    Evidence", "-" * (w_id + w_st + 30)]
    for r in rows:
        levels = ",".join(lv + ("i" if lv in r["independence_at"] else "") for lv in r["applicability"])
        lines.append(f"{r['id']:<{w_id}}  {r['status']:<{w_st}}  {levels:<8}  {r['evidence_resolution']}")
    lines.append("")
    lines.append("Status totals:")
    for status, n in report["status_histogram"].items():
        lines.append(f"  {status:<16} {n}")
    lines.append(f"  {'TOTAL':<16} {report['total']}")
    if report["architecture"]:
        lines.append("")
        lines.append("Architecture requirements:")
        for a in report["architecture"]:
            lines.append(f"  {a['id']:<7} {a['result']:<6} {a['description']} ({a['detail']})")
    return "\n".join(lines) + "\n"
