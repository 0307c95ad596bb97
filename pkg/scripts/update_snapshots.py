#!/usr/bin/env python3
"""Regenerate the golden Triton-source snapshots under tests/snapshots/.

Any diff against the checked-in files is a reviewed change; tests compare
byte-for-byte.
"""

from pathlib import Path

from tiledsl.catalog import CATALOG_NAMES, catalog
from tiledsl.emit import emit_triton, manifest_json
from tiledsl.tileir import typecheck

SNAP_DIR = Path(__file__).resolve().parent.parent / "tests" / "snapshots"


def main() -> None:
    SNAP_DIR.mkdir(parents=True, exist_ok=True)
    for name in CATALOG_NAMES:
        emitted = emit_triton(typecheck(catalog(name)))
        (SNAP_DIR / f"{name}.py.golden").write_text(emitted.source)
        (SNAP_DIR / f"{name}.manifest.json.golden").write_text(manifest_json(emitted))
        print(f"wrote {name}")


if __name__ == "__main__":
    main()
