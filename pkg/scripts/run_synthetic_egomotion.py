#!/usr/bin/env python3
"""Full synthetic pipeline: dot-field scene, dense network, yaw estimate.

Writes spikes, activity, heading, and metrics into the output directory
and prints the headline numbers.
"""

import json
import sys
import tempfile
from pathlib import Path

from tde_egomotion.cli import main

CONFIG = {
    "input": {
        "kind": "yaw_dots",
        "sensor_width": 64,
        "sensor_height": 48,
        "duration_us": 20_000_000,
        "seed": 0,
        "yaw_rate": {"amplitude_rad_s": 0.3, "period_s": 4.0},
        "dot_density": 0.02,
        "px_per_rad": 400.0,
    },
    "network": {"type": "dense", "stride": 2},
    "readout": {"tau_a": 10e-3},
}


def run(out_dir: str, workers: int = 1) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(CONFIG, indent=2))
    code = main(
        ["estimate", "--config", str(cfg_path), "--out", str(out), "--workers", str(workers)]
    )
    if code == 0:
        report = json.loads((out / "metrics.json").read_text())
        print(f"pearson_r          {report['pearson_r']:.4f}")
        print(f"arre (angle)       {report['arre_angle']:.6f} rad")
        print(f"calibrated scale   {report['scale']:.4f} rad/s per unit activity")
        print(f"final heading err  {report['final_heading_error']:.4f} rad")
        print(f"outputs in         {out}")
    return code


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="egomotion_")
    workers = int(sys.argv[2]) if len(sys.argv) > 2 else 1
    sys.exit(run(out, workers))
