"""Event-camera yaw-rate estimation with time difference encoder networks."""

from .events import (
    Event,
    EventStream,
    PoseTrack,
    StimulusSpec,
    gen_moving_edge,
    gen_yaw_dots,
    read_events,
    read_pose_csv,
    write_events,
)
from .network import NetworkConfig, Orientation, build_dense, build_two_box, run
from .readout import ActivityTrace, combine, integrate_diff, integrate_heading, normalize
from .tde import SweepResult, TdeParams, TdeState, run_pair_sweep

__all__ = [
    "Event",
    "EventStream",
    "PoseTrack",
    "StimulusSpec",
    "gen_moving_edge",
    "gen_yaw_dots",
    "read_events",
    "read_pose_csv",
    "write_events",
    "NetworkConfig",
    "Orientation",
    "build_dense",
    "build_two_box",
    "run",
    "ActivityTrace",
    "combine",
    "integrate_diff",
    "integrate_heading",
    "normalize",
    "SweepResult",
    "TdeParams",
    "TdeState",
    "run_pair_sweep",
]

__version__ = "0.1.0"
