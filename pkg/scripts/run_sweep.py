#!/usr/bin/env python3
"""Characterise a single unit over pair separations and print the table."""

import sys
import tempfile
from pathlib import Path

from tde_egomotion.cli import main


def run(out_dir: str) -> int:
    code = main(["sweep", "--out", out_dir])
    if code == 0:
        print((Path(out_dir) / "sweep.csv").read_text(), end="")
    return code


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="sweep_")
    sys.exit(run(out))
