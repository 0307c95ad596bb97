#!/usr/bin/env python3
"""Export every built-in kernel spec to kernels/<name>.json."""

import argparse
from pathlib import Path

from tiledsl.catalog import CATALOG_NAMES, catalog
from tiledsl.tileir import serialize_spec


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "kernels",
        help="directory to write <name>.json files into",
    )
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name in CATALOG_NAMES:
        path = args.out_dir / f"{name}.json"
        path.write_text(serialize_spec(catalog(name)))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
