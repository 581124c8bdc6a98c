"""Requirements-to-dataset traceability.

Dataset files are tagged with requirement ids through sidecar files: the
tags of ``signs/img_001.png`` live in ``signs/img_001.png.tags``, one id per
line. A manifest is a plain-text pointer file, one line per data file::

    <sha256-hex> <byte_size> <path> <comma-separated-tags>

sorted by path with LF endings, so it diffs cleanly under Git. An item with
no tags is written with ``-`` in the tag column.
"""

from __future__ import annotations

import enum
import hashlib
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path, PurePosixPath
from typing import Iterable, Sequence

SIDECAR_SUFFIX = ".tags"
BUILTIN = "builtin"
_ID_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")
_HEX_RE = re.compile(r"^[0-9a-f]{64}$")


class Dimension(str, enum.Enum):
    AIRPORT = "AIRPORT"
    WEATHER = "WEATHER"
    TIME_OF_DAY = "TIME_OF_DAY"
    DISTANCE = "DISTANCE"
    ELEVATION = "ELEVATION"
    LATERAL_OFFSET = "LATERAL_OFFSET"


class CatalogError(ValueError):
    pass


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Requirement:
    id: str
    dimension: Dimension
    description: str = ""


@dataclass(frozen=True)
class DataItem:
    path: str
    content_hash: str
    tags: frozenset = frozenset()
    byte_size: int = 0

    def __post_init__(self):
        if not _HEX_RE.match(self.content_hash):
            raise ManifestError(f"{self.path}: content hash must be 64 lowercase hex digits")


@dataclass
class TraceMatrix:
    """Links in both directions; ``by_requirement`` rows list covering items."""

    by_requirement: dict[str, list[str]]
    by_item: dict[str, list[str]]

    def row(self, requirement_id: str) -> list[str]:
        return self.by_requirement.get(requirement_id, [])

    def to_dict(self) -> dict:
        return {
            "requirements": {
                rid: {"items": items, "count": len(items)} for rid, items in self.by_requirement.items()
            },
            "items": self.by_item,
        }


@dataclass
class CoverageReport:
    counts: dict[str, int]
    uncovered: list[str]
    untraced_tags: dict[str, list[str]]
    missing_dimensions: dict[str, list[str]]
    # items with more than one tag in a dimension; a warning, never an error
    multi_tag_warnings: dict[str, list[str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "counts": self.counts,
            "uncovered": self.uncovered,
            "untraced_tags": self.untraced_tags,
            "missing_dimensions": self.missing_dimensions,
            "multi_tag_warnings": self.multi_tag_warnings,
        }


@dataclass(frozen=True)
class Collision:
    content_hash: str
    paths_a: tuple[str, ...]
    paths_b: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"content_hash": self.content_hash, "paths_a": list(self.paths_a), "paths_b": list(self.paths_b)}


def parse_catalog(lines: Iterable[str], source: str = "<catalog>") -> list[Requirement]:
    reqs: list[Requirement] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) < 2:
            raise CatalogError(f"{source}:{lineno}: expected '<id> <DIMENSION> <description>'")
        rid, dim = parts[0], parts[1]
        if rid in seen:
            raise CatalogError(f"{source}:{lineno}: duplicate requirement id {rid!r}")
        try:
            dimension = Dimension(dim)
        except ValueError:
            raise CatalogError(f"{source}:{lineno}: unknown dimension {dim!r}") from None
        seen.add(rid)
        reqs.append(Requirement(rid, dimension, parts[2] if len(parts) > 2 else ""))
    return reqs


def builtin_catalog() -> list[Requirement]:
    text = resources.files("dualsafe").joinpath("data/requirements.txt").read_text(encoding="utf-8")
    return parse_catalog(text.splitlines(), "builtin")


def load_catalog(path) -> list[Requirement]:
    """Load a requirement catalog; ``"builtin"`` selects the bundled one."""
    if str(path) == BUILTIN:
        return builtin_catalog()
    with open(path, encoding="utf-8") as fh:
        return parse_catalog(fh, str(path))


def by_dimension(catalog: Sequence[Requirement]) -> dict[Dimension, list[Requirement]]:
    groups: dict[Dimension, list[Requirement]] = defaultdict(list)
    for r in catalog:
        groups[r.dimension].append(r)
    return dict(groups)


def sha256_file(path, chunk_size: int = 1 << 20) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(chunk_size), b""):
            h.update(chunk)
    return h.hexdigest()


def read_sidecar(path) -> frozenset:
    tags = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            tag = raw.strip()
            if not tag or tag.startswith("#"):
                continue
            if not _ID_RE.match(tag):
                raise ManifestError(f"{path}:{lineno}: malformed tag {tag!r}")
            tags.add(tag)
    return frozenset(tags)


def build_manifest(root) -> list[DataItem]:
    """Hash every regular file under ``root`` and attach its sidecar tags."""
    root = Path(root)
    if not root.is_dir():
        raise ManifestError(f"{root}: not a readable directory")
    files: dict[str, Path] = {}
    sidecars: dict[str, Path] = {}
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in filenames:
            full = Path(dirpath) / name
            if not full.is_file():
                continue
            rel = PurePosixPath(full.relative_to(root).as_posix())
            if name.endswith(SIDECAR_SUFFIX):
                sidecars[str(rel)[: -len(SIDECAR_SUFFIX)]] = full
            else:
                files[str(rel)] = full
    orphans = sorted(set(sidecars) - set(files))
    if orphans:
        raise ManifestError(f"sidecar without data file: {orphans[0]}{SIDECAR_SUFFIX}")
    items = []
    for rel in sorted(files):
        full = files[rel]
        try:
            digest = sha256_file(full)
            size = full.stat().st_size
        except OSError as exc:
            raise ManifestError(f"{full}: {exc}") from exc
        tags = read_sidecar(sidecars[rel]) if rel in sidecars else frozenset()
        items.append(DataItem(rel, digest, tags, size))
    return items


def format_manifest(items: Iterable[DataItem]) -> str:
    lines = []
    for item in sorted(items, key=lambda i: i.path):
        tags = ",".join(sorted(item.tags)) or "-"
        lines.append(f"{item.content_hash} {item.byte_size} {item.path} {tags}\n")
    return "".join(lines)


def write_manifest(items: Iterable[DataItem], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_manifest(items))


def parse_manifest(lines: Iterable[str], source: str = "<manifest>") -> list[DataItem]:
    items = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        head = line.split(" ", 2)
        if len(head) != 3 or " " not in head[2]:
            raise ManifestError(f"{source}:{lineno}: expected '<sha256> <size> <path> <tags>'")
        digest, size, rest = head
        path, tags = rest.rsplit(" ", 1)
        if not size.isdigit():
            raise ManifestError(f"{source}:{lineno}: byte size must be a non-negative integer")
        tagset = frozenset() if tags == "-" else frozenset(tags.split(","))
        try:
            items.append(DataItem(path, digest, tagset, int(size)))
        except ManifestError as exc:
            raise ManifestError(f"{source}:{lineno}: {exc}") from None
    return items


def read_manifest(path) -> list[DataItem]:
    with open(path, encoding="utf-8") as fh:
        return parse_manifest(fh, str(path))


def trace(catalog: Sequence[Requirement], manifest: Sequence[DataItem]) -> tuple[TraceMatrix, CoverageReport]:
    known = {r.id: r for r in catalog}
    dims_in_use = sorted({r.dimension for r in catalog}, key=lambda d: list(Dimension).index(d))
    by_req: dict[str, list[str]] = {r.id: [] for r in catalog}
    by_item: dict[str, list[str]] = {}
    untraced: dict[str, list[str]] = defaultdict(list)
    missing: dict[str, list[str]] = {}
    multi: dict[str, list[str]] = {}

    for item in sorted(manifest, key=lambda i: i.path):
        linked = sorted(t for t in item.tags if t in known)
        by_item[item.path] = linked
        for rid in linked:
            by_req[rid].append(item.path)
        for tag in sorted(item.tags - known.keys()):
            untraced[tag].append(item.path)
        per_dim: dict[Dimension, int] = defaultdict(int)
        for rid in linked:
            per_dim[known[rid].dimension] += 1
        gaps = [d.value for d in dims_in_use if per_dim[d] == 0]
        if gaps:
            missing[item.path] = gaps
        crowded = [d.value for d in dims_in_use if per_dim[d] > 1]
        if crowded:
            multi[item.path] = crowded

    counts = {rid: len(paths) for rid, paths in by_req.items()}
    report = CoverageReport(
        counts=counts,
        uncovered=[rid for rid, n in counts.items() if n == 0],
        untraced_tags=dict(sorted(untraced.items())),
        missing_dimensions=missing,
        multi_tag_warnings=multi,
    )
    return TraceMatrix(by_req, by_item), report


def check_independence(manifest_a: Sequence[DataItem], manifest_b: Sequence[DataItem]) -> list[Collision]:
    """Content hashes present in both manifests (exact-duplicate leakage)."""
    paths_a: dict[str, list[str]] = defaultdict(list)
    paths_b: dict[str, list[str]] = defaultdict(list)
    for item in manifest_a:
        paths_a[item.content_hash].append(item.path)
    for item in manifest_b:
        paths_b[item.content_hash].append(item.path)
    return [
        Collision(h, tuple(sorted(paths_a[h])), tuple(sorted(paths_b[h])))
        for h in sorted(paths_a.keys() & paths_b.keys())
    ]


def format_histogram(counts: dict[str, int], width: int = 40) -> str:
    """Text rendering of the per-requirement coverage histogram."""
    if not counts:
        return ""
    top = max(counts.values()) or 1
    pad = max(len(k) for k in counts)
    rows = []
    for rid, n in counts.items():
        bar = "#" * round(width * n / top)
        rows.append(f"{rid:<{pad}} {n:>6} {bar}".rstrip())
    return "\n".join(rows) + "\n"
