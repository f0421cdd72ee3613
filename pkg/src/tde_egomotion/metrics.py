"""Rotation-error metric, time alignment, scale calibration, diagnostics.

The rotation error is the mean norm of the log of the relative rotation
between predicted and ground-truth per-step rotations. "Norm" is the
rotation angle by default (spectral norm of the skew log); the Frobenius
norm, sqrt(2) times the angle, is selectable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .events import PoseTrack
from .readout import ActivityTrace

ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class ArreOptions:
    norm: str = "angle"  # "angle" or "frobenius"

    def __post_init__(self) -> None:
        if self.norm not in ("angle", "frobenius"):
            raise ValueError(f"unknown norm {self.norm!r}")


def rot_z(phi: float) -> np.ndarray:
    """Rotation about z by ``phi`` radians."""
    if not np.isfinite(phi):
        raise ValueError("phi must be finite")
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _check_rotation(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise ValueError("rotation matrix must be 3x3")
    if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-6 or abs(np.linalg.det(R) - 1.0) > 1e-6:
        raise ValueError("input is not a rotation matrix")
    return R


def so3_log(R: np.ndarray) -> tuple[np.ndarray, float]:
    """Rodrigues log: unit axis and angle in [0, pi].

    Near angle 0 the axis is arbitrary-but-unit; near pi the axis is
    recovered from the columns of R + I.
    """
    R = _check_rotation(R)
    cos_angle = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = float(np.arccos(cos_angle))
    skew = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if angle < 1e-10:
        return np.array([0.0, 0.0, 1.0]), angle
    if np.pi - angle > 1e-6:
        return skew / (2.0 * np.sin(angle)), angle
    # Near pi: axis from the dominant column of R + I; sign from the skew part.
    M = R + np.eye(3)
    col = int(np.argmax(np.linalg.norm(M, axis=0)))
    axis = M[:, col] / np.linalg.norm(M[:, col])
    if np.dot(axis, skew) < 0:
        axis = -axis
    return axis, angle


def so3_exp(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues exponential (oracle companion to so3_log)."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    K = np.array(
        [[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]]
    )
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def arre(
    P: Sequence[np.ndarray], G: Sequence[np.ndarray], opts: ArreOptions = ArreOptions()
) -> float:
    """Mean norm of logm(P_i^T G_i) over paired rotation lists."""
    if len(P) == 0 or len(G) == 0:
        raise ValueError("empty input")
    if len(P) != len(G):
        raise ValueError(f"length mismatch: {len(P)} vs {len(G)}")
    total = 0.0
    for p, g in zip(P, G):
        _, angle = so3_log(_check_rotation(p).T @ g)
        total += angle
    mean = total / len(P)
    return mean * np.sqrt(2.0) if opts.norm == "frobenius" else mean


def resample_linear(
    source: Union[ActivityTrace, PoseTrack], target_ts: np.ndarray, field: str = "yaw_rate"
) -> np.ndarray:
    """Linear interpolation at target timestamps (microseconds).

    Extrapolation outside the source span is an error.
    """
    if isinstance(source, ActivityTrace):
        ts, values = source.times_us(), source.samples
    else:
        ts, values = source.t_us, getattr(source, field)
    target_ts = np.asarray(target_ts, dtype=np.int64)
    if len(ts) == 0:
        raise ValueError("empty source")
    if np.any(target_ts < ts[0]) or np.any(target_ts > ts[-1]):
        raise ValueError("target timestamps outside the source time span")
    return np.interp(target_ts, ts, values)


def calibrate_scale(pred_norm: np.ndarray, gt_rate: np.ndarray) -> tuple[float, int]:
    """Least-squares scalar mapping unitless activity to rad/s.

    Returns (scale, sign); sign is the sign of the scale.
    """
    pred = np.asarray(pred_norm, dtype=np.float64)
    gt = np.asarray(gt_rate, dtype=np.float64)
    if len(pred) != len(gt):
        raise ValueError("length mismatch")
    denom = float(np.dot(pred, pred))
    if denom == 0.0:
        raise ValueError("degenerate prediction: all zero")
    if not np.any(gt):
        raise ValueError("ground truth is all zero")
    s = float(np.dot(gt, pred)) / denom
    return s, (1 if s >= 0 else -1)


def relative_rotations(track: PoseTrack) -> list[np.ndarray]:
    """Per-step yaw rotations rot_z(rate_i * dt_i) on the track's own grid."""
    if len(track.t_us) < 2:
        raise ValueError("need at least 2 samples")
    dts = np.diff(track.t_us).astype(np.float64) * 1e-6
    return [rot_z(float(track.yaw_rate[i] * dts[i])) for i in range(len(dts))]


def drift_report(pred_heading: PoseTrack, gt_heading: PoseTrack) -> dict:
    """Heading drift diagnostics on the ground-truth grid."""
    lo = max(pred_heading.t_us[0], gt_heading.t_us[0])
    hi = min(pred_heading.t_us[-1], gt_heading.t_us[-1])
    if hi < lo:
        raise ValueError("tracks do not overlap in time")
    sel = (gt_heading.t_us >= lo) & (gt_heading.t_us <= hi)
    ts = gt_heading.t_us[sel]
    gt = gt_heading.yaw[sel]
    pred = resample_linear(pred_heading, ts, field="yaw")
    err = pred - gt
    if np.std(pred) == 0.0 or np.std(gt) == 0.0:
        r = 1.0 if np.allclose(err, err[0]) else 0.0
    else:
        r = float(np.corrcoef(pred, gt)[0, 1])
    return {
        "final_error": float(abs(err[-1])),
        "max_error": float(np.max(np.abs(err))),
        "pearson_r": r,
    }


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.corrcoef(a, b)[0, 1])
