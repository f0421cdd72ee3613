"""``mvsec2evt``: batch-convert an MVSEC HDF5 recording."""

from __future__ import annotations

import argparse
import logging
import sys

from .convert import ConversionError, ConversionSpec, convert


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvsec2evt", description=__doc__)
    p.add_argument("--in", dest="input_path", required=True, help="MVSEC HDF5 recording")
    p.add_argument("--start", type=float, required=True, help="window start, seconds")
    p.add_argument("--end", type=float, required=True, help="window end, seconds")
    p.add_argument("--events-out", required=True, help="EVT1 output path")
    p.add_argument("--pose-out", required=True, help="pose CSV output path")
    p.add_argument("--camera", default="left")
    p.add_argument("--events-path", default=None, help="override the events dataset path")
    p.add_argument("--pose-path", default=None, help="override the pose dataset path")
    p.add_argument("--pose-ts-path", default=None, help="override the pose timestamp path")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        spec = ConversionSpec(
            input_path=args.input_path,
            start_s=args.start,
            end_s=args.end,
            events_out=args.events_out,
            pose_out=args.pose_out,
            camera=args.camera,
            events_path=args.events_path,
            pose_path=args.pose_path,
            pose_ts_path=args.pose_ts_path,
        )
        summary = convert(spec)
    except (ConversionError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {summary['events']} events, {summary['pose_samples']} pose samples")
    return 0


if __name__ == "__main__":
    sys.exit(main())
