"""MVSEC HDF5 -> portable EVT1 / pose-CSV conversion.

Reads the left-camera event table and the fused ground-truth poses from
an MVSEC-style recording, selects a time window, rebases timestamps to
the window start in microseconds, and writes the two portable files:

- EVT1: magic ``EVT1``, little-endian header (u16 width, u16 height,
  u64 count), then 16-byte records (u64 t_us, u16 x, u16 y, i8 p,
  3 pad bytes).
- pose CSV: ``t_us,yaw_rad,yaw_rate_rad_s`` rows; yaw is the z-axis
  Euler angle of the pose rotation, unwrapped, with the rate from
  central differences.

Dataset layouts vary across MVSEC releases, so every HDF5 dataset path
is overridable on the spec. Yaw follows the right-handed convention
atan2(R[1,0], R[0,0]) in MVSEC's world frame; a consumer with the
opposite sign convention should flip the sign downstream.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field

import h5py
import numpy as np

log = logging.getLogger(__name__)

EVT1_MAGIC = b"EVT1"
EVT1_HEADER = struct.Struct("<HHQ")  # width, height, event count
EVT1_RECORD_DTYPE = np.dtype(
    [("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1"), ("pad", "V3")]
)

SENSOR_WIDTH = 346  # DAVIS 346B
SENSOR_HEIGHT = 260


class ConversionError(RuntimeError):
    pass


@dataclass
class ConversionSpec:
    input_path: str
    start_s: float
    end_s: float
    events_out: str
    pose_out: str
    camera: str = "left"
    # HDF5 dataset paths; None means the default for the chosen camera.
    events_path: str | None = None
    pose_path: str | None = None
    pose_ts_path: str | None = None
    imu_path: str | None = None
    imu_ts_path: str | None = None
    imu_zgyro_col: int = 5  # gyro z in the (ax, ay, az, gx, gy, gz) layout

    def __post_init__(self) -> None:
        if not (self.end_s > self.start_s >= 0):
            raise ValueError("require end > start >= 0")
        prefix = f"davis/{self.camera}"
        if self.events_path is None:
            self.events_path = f"{prefix}/events"
        if self.pose_path is None:
            self.pose_path = f"{prefix}/pose"
        if self.pose_ts_path is None:
            self.pose_ts_path = f"{prefix}/pose_ts"
        if self.imu_path is None:
            self.imu_path = f"{prefix}/imu"
        if self.imu_ts_path is None:
            self.imu_ts_path = f"{prefix}/imu_ts"


def _require(f: h5py.File, path: str) -> np.ndarray:
    if path not in f:
        raise ConversionError(f"{f.filename}: missing dataset {path!r}")
    return np.asarray(f[path])


def _rebase_us(t_s: np.ndarray, start_s: float) -> np.ndarray:
    return np.rint((t_s - start_s) * 1e6).astype(np.int64)


def convert_events(spec: ConversionSpec) -> int:
    """Write the windowed event selection as EVT1; returns the event count.

    Source timestamps are expected in seconds, absolute or recording
    relative, matching the window bounds. Non-monotonic sources are
    reported and stably sorted.
    """
    with h5py.File(spec.input_path, "r") as f:
        table = _require(f, spec.events_path)
    if table.ndim != 2 or table.shape[1] < 4:
        raise ConversionError(f"{spec.events_path}: expected an N x 4 (x, y, t, p) table")
    x, y, t, p = table[:, 0], table[:, 1], table[:, 2], table[:, 3]
    sel = (t >= spec.start_s) & (t < spec.end_s)
    x, y, t, p = x[sel], y[sel], t[sel], p[sel]
    if len(t) == 0:
        log.warning("window (%s, %s) selects no events", spec.start_s, spec.end_s)
    if np.any(np.diff(t) < 0):
        log.warning("%s: non-monotonic event timestamps; applying stable sort", spec.input_path)
        order = np.argsort(t, kind="stable")
        x, y, t, p = x[order], y[order], t[order], p[order]

    rec = np.zeros(len(t), dtype=EVT1_RECORD_DTYPE)
    rec["t"] = _rebase_us(t, spec.start_s).astype(np.uint64)
    rec["x"] = x.astype(np.uint16)
    rec["y"] = y.astype(np.uint16)
    rec["p"] = np.where(p > 0, 1, -1).astype(np.int8)
    with open(spec.events_out, "wb") as out:
        out.write(EVT1_MAGIC)
        out.write(EVT1_HEADER.pack(SENSOR_WIDTH, SENSOR_HEIGHT, len(rec)))
        out.write(rec.tobytes())
    return len(rec)


def yaw_from_pose(poses: np.ndarray) -> np.ndarray:
    """Unwrapped z-axis Euler angle from an (N, 4, 4) or (N, 3, 3) stack."""
    poses = np.asarray(poses, dtype=np.float64)
    if poses.ndim != 3 or poses.shape[1] < 3 or poses.shape[2] < 3:
        raise ConversionError("pose dataset must stack 3x3 or 4x4 transforms")
    yaw = np.arctan2(poses[:, 1, 0], poses[:, 0, 0])
    return np.unwrap(yaw)


def convert_pose(spec: ConversionSpec) -> int:
    """Write the windowed pose track as CSV; returns the sample count."""
    with h5py.File(spec.input_path, "r") as f:
        poses = _require(f, spec.pose_path)
        ts = _require(f, spec.pose_ts_path).astype(np.float64)
    if len(ts) != len(poses):
        raise ConversionError("pose and pose_ts lengths differ")
    yaw = yaw_from_pose(poses)
    sel = (ts >= spec.start_s) & (ts < spec.end_s)
    if not np.any(sel):
        raise ConversionError(f"window ({spec.start_s}, {spec.end_s}) selects no pose samples")
    ts, yaw = ts[sel], yaw[sel]
    rate = np.gradient(yaw, ts) if len(ts) > 1 else np.zeros(1)
    t_us = _rebase_us(ts, spec.start_s)
    with open(spec.pose_out, "w", encoding="utf-8") as out:
        out.write("t_us,yaw_rad,yaw_rate_rad_s\n")
        for i in range(len(t_us)):
            out.write(f"{t_us[i]},{yaw[i]:.12g},{rate[i]:.12g}\n")
    return len(t_us)


def imu_zgyro(spec: ConversionSpec) -> tuple[np.ndarray, np.ndarray]:
    """Windowed (t_us, rate) pairs from the recording's own z gyro.

    A sanity reference for the derived yaw rate; raises if the recording
    carries no IMU data.
    """
    with h5py.File(spec.input_path, "r") as f:
        imu = _require(f, spec.imu_path)
        ts = _require(f, spec.imu_ts_path).astype(np.float64)
    if imu.ndim != 2 or imu.shape[1] <= spec.imu_zgyro_col:
        raise ConversionError(f"{spec.imu_path}: no column {spec.imu_zgyro_col}")
    sel = (ts >= spec.start_s) & (ts < spec.end_s)
    return _rebase_us(ts[sel], spec.start_s), np.asarray(imu[sel, spec.imu_zgyro_col])


def convert(spec: ConversionSpec) -> dict:
    """Run both conversions; returns a small summary dict."""
    n_events = convert_events(spec)
    n_pose = convert_pose(spec)
    return {"events": n_events, "pose_samples": n_pose}
