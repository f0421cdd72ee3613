#!/usr/bin/env python3
"""Verify the analog closed forms against numerical integration."""

import json
import sys
import tempfile
from pathlib import Path

from tde_egomotion.cli import main


def run(out_dir: str) -> int:
    code = main(["analog", "--out", out_dir])
    summary = json.loads((Path(out_dir) / "analog_summary.json").read_text())
    print(f"tau_fac            {summary['tau_fac_s'] * 1e3:.3f} ms")
    print(f"fitted log slope   {summary['fitted_slope_per_s']:.3f} /s")
    print(f"expected slope     {summary['expected_slope_per_s']:.3f} /s")
    print(f"max ODE rel error  {summary['max_ode_rel_error']:.2e}")
    print(f"pass               {summary['pass']}")
    return code


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="analog_")
    sys.exit(run(out))
