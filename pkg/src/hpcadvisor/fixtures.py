"""Bundled demo inputs: the three-SKU catalog, synthetic models, and a grid.

``python -m hpcadvisor.fixtures DIR`` copies them somewhere convenient for
CLI experiments.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from importlib import resources
from pathlib import Path

CATALOG = "catalog.jsonl"
GRID = "grid_demo.json"
MODEL_SHARED = "model_shared.jsonl"
MODEL_DEMO = "model_demo.jsonl"

_ALL = (CATALOG, GRID, MODEL_SHARED, MODEL_DEMO)


def fixture_path(name: str) -> Path:
    path = Path(str(resources.files(__package__) / "data" / name))
    if not path.exists():
        raise FileNotFoundError(f"bundled fixture missing: {name}")
    return path


def catalog_path() -> Path:
    return fixture_path(CATALOG)


def grid_path() -> Path:
    return fixture_path(GRID)


def shared_model_path() -> Path:
    """Model whose SKUs share one scaling shape (exact-recovery regime)."""
    return fixture_path(MODEL_SHARED)


def demo_model_path() -> Path:
    """Model with per-SKU efficiency exponents and mild noise."""
    return fixture_path(MODEL_DEMO)


def copy_fixtures(dest: str | Path) -> list[Path]:
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    copied = []
    for name in _ALL:
        target = dest / name
        shutil.copyfile(fixture_path(name), target)
        copied.append(target)
    return copied


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m hpcadvisor.fixtures",
        description="Copy the bundled demo fixtures into a directory.",
    )
    parser.add_argument("dest", help="destination directory")
    args = parser.parse_args(argv)
    for path in copy_fixtures(args.dest):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
