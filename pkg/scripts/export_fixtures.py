#!/usr/bin/env python3
"""Write every canonical fixture as an SCM spec plus a sample dataset."""

from __future__ import annotations

from pathlib import Path

from neurocause.fixtures import FIXTURE_NAMES, canonical_fixture
from neurocause.scm import sample, write_dataset_csv, write_scm

SAMPLES = 1000
SEED = 0


def export_fixtures(out_dir: Path) -> None:
    """Write ``<name>.scm`` and ``<name>.csv`` for each fixture into ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in FIXTURE_NAMES:
        scm = canonical_fixture(name)
        write_scm(scm, out_dir / f"{name}.scm")
        write_dataset_csv(sample(scm, SAMPLES, SEED), out_dir / f"{name}.csv")
        print(f"  {name}: {len(scm.dag.edges)} edges")

    print(f"\nExported {len(FIXTURE_NAMES)} fixtures to {out_dir}")


if __name__ == "__main__":
    import sys

    if len(sys.argv) > 1:
        out_dir = Path(sys.argv[1])
    else:
        out_dir = Path(__file__).parent.parent / "fixtures"

    export_fixtures(out_dir)
