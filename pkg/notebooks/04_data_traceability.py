"""
Tracing dataset items to data requirements
==========================================

Every image is tagged with the requirements it helps cover. The manifest
records content hashes so two channels' datasets can be checked for shared
files.
"""

import tempfile
from pathlib import Path

from dualsafe.datatrace import (
    build_manifest,
    builtin_catalog,
    by_dimension,
    check_independence,
    format_histogram,
    format_manifest,
    trace,
)

catalog = builtin_catalog()
for dim, reqs in by_dimension(catalog).items():
    print(f"{dim.value:<15}", " ".join(r.id for r in reqs))

root = Path(tempfile.mkdtemp())


def add(ds, name, data, tags):
    p = root / ds / name
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(data)
    p.with_name(name + ".tags").write_text("\n".join(tags) + "\n")


add("a", "sfo_rain.png", b"sfo rain", ["KSFO", "RAIN", "DUSK", "DS10", "EL13", "LO00"])
add("a", "bos_fair.png", b"bos fair", ["KBOS", "FAIR", "MRNG", "DS12", "EL10", "LO07"])
add("b", "san_fog.png", b"san fog", ["KSAN", "FOG", "AFTN", "DS14", "EL16", "LO14"])
add("b", "copy.png", b"sfo rain", ["KSFO", "RAIN"])  # same bytes as a/sfo_rain.png

items_a = build_manifest(root / "a")
print(format_manifest(items_a))

_, report = trace(catalog, items_a)
print(format_histogram(report.counts, width=10))
print("uncovered:", report.uncovered)

###############################################################################
# The copied image shows up as a shared hash between the two datasets.

for c in check_independence(items_a, build_manifest(root / "b")):
    print(c.content_hash[:12], c.paths_a, c.paths_b)
