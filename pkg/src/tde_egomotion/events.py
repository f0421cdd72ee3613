"""Event and pose data types, portable file I/O, and synthetic stimuli.

Timestamps are integer microseconds relative to stream start. Polarity is
carried through but the downstream network treats both polarities alike,
so the generators here emit +1 only.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

EVT1_MAGIC = b"EVT1"
EVT1_HEADER = struct.Struct("<HHQ")  # width, height, event count
EVT1_RECORD_DTYPE = np.dtype(
    [("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1"), ("pad", "V3")]
)
EVENT_CSV_HEADER = "t_us,x,y,p"
POSE_CSV_HEADER = "t_us,yaw_rad"


class EventFormatError(ValueError):
    """Malformed event or pose file (message carries line / byte offset)."""


@dataclass(frozen=True)
class Event:
    t: int  # microseconds since stream start
    x: int
    y: int
    p: int  # -1 or +1


@dataclass
class EventStream:
    """Time-sorted events over a fixed sensor geometry.

    Events are stored as parallel numpy arrays for fast routing; iterate
    or index to obtain :class:`Event` views.
    """

    sensor_width: int
    sensor_height: int
    t: np.ndarray  # int64 microseconds, nondecreasing
    x: np.ndarray  # int32
    y: np.ndarray  # int32
    p: np.ndarray  # int8, -1 or +1

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.int64)
        self.x = np.asarray(self.x, dtype=np.int32)
        self.y = np.asarray(self.y, dtype=np.int32)
        self.p = np.asarray(self.p, dtype=np.int8)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event field arrays must have equal length")
        self.validate()

    def validate(self) -> None:
        if self.sensor_width <= 0 or self.sensor_height <= 0:
            raise ValueError("sensor geometry must be positive")
        if len(self.t) == 0:
            return
        if np.any(np.diff(self.t) < 0):
            i = int(np.argmax(np.diff(self.t) < 0)) + 1
            raise EventFormatError(f"timestamps decrease at event index {i}")
        if self.t[0] < 0:
            raise EventFormatError("negative timestamp at event index 0")
        if np.any((self.x < 0) | (self.x >= self.sensor_width)):
            i = int(np.argmax((self.x < 0) | (self.x >= self.sensor_width)))
            raise EventFormatError(f"x out of bounds at event index {i}")
        if np.any((self.y < 0) | (self.y >= self.sensor_height)):
            i = int(np.argmax((self.y < 0) | (self.y >= self.sensor_height)))
            raise EventFormatError(f"y out of bounds at event index {i}")
        if np.any((self.p != 1) & (self.p != -1)):
            i = int(np.argmax((self.p != 1) & (self.p != -1)))
            raise EventFormatError(f"polarity not in {{-1,1}} at event index {i}")

    @classmethod
    def empty(cls, sensor_width: int, sensor_height: int) -> "EventStream":
        z = np.zeros(0)
        return cls(sensor_width, sensor_height, z, z, z, z)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.sensor_width == other.sensor_width
            and self.sensor_height == other.sensor_height
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )


@dataclass
class PoseTrack:
    """Timestamped yaw / yaw-rate samples (ground truth or prediction)."""

    t_us: np.ndarray  # int64, nondecreasing
    yaw: np.ndarray  # radians, accumulated heading
    yaw_rate: np.ndarray  # radians / second
    rate_filled: bool = False  # yaw_rate derived by finite differences
    degenerate: bool = False  # too few samples to differentiate

    def __post_init__(self) -> None:
        self.t_us = np.asarray(self.t_us, dtype=np.int64)
        self.yaw = np.asarray(self.yaw, dtype=np.float64)
        self.yaw_rate = np.asarray(self.yaw_rate, dtype=np.float64)
        if not (len(self.t_us) == len(self.yaw) == len(self.yaw_rate)):
            raise ValueError("pose field arrays must have equal length")
        if len(self.t_us) > 1 and np.any(np.diff(self.t_us) < 0):
            raise EventFormatError("pose timestamps decrease")


@dataclass
class StimulusSpec:
    """Parameters for the synthetic stimulus generators."""

    kind: str  # "moving_edge" or "yaw_dots"
    sensor_width: int
    sensor_height: int
    duration_us: int
    velocity_px_per_s: float = 0.0  # moving_edge only
    yaw_rate_fn: Optional[Callable[[float], float]] = None  # t [s] -> rad/s
    dot_density: float = 0.02  # dots per pixel, yaw_dots only
    px_per_rad: float = 400.0  # scene-to-pixel gain, yaw_dots only
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("moving_edge", "yaw_dots"):
            raise ValueError(f"unknown stimulus kind {self.kind!r}")
        if self.duration_us <= 0:
            raise ValueError("duration_us must be positive")
        if self.kind == "yaw_dots":
            if not (0.0 < self.dot_density <= 1.0):
                raise ValueError("dot_density must be in (0, 1]")
            if self.px_per_rad <= 0:
                raise ValueError("px_per_rad must be positive")


# ---------------------------------------------------------------------------
# File I/O


def read_events(path, format: str) -> EventStream:
    """Read a validated, time-sorted event stream from ``path``.

    Out-of-order input is rejected rather than silently sorted.
    """
    if format == "csv":
        return _read_events_csv(path)
    if format == "evt1":
        return _read_events_evt1(path)
    raise ValueError(f"unknown event format {format!r}")


def write_events(stream: EventStream, path, format: str) -> None:
    """Write ``stream`` so that :func:`read_events` yields an equal stream."""
    if format == "csv":
        _write_events_csv(stream, path)
    elif format == "evt1":
        _write_events_evt1(stream, path)
    else:
        raise ValueError(f"unknown event format {format!r}")


def _read_events_csv(path) -> EventStream:
    # CSV carries no geometry; infer the tightest geometry containing the
    # events unless the caller revalidates against a known sensor.
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != EVENT_CSV_HEADER:
            raise EventFormatError(f"{path}: line 1: expected header {EVENT_CSV_HEADER!r}")
        rows = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise EventFormatError(f"{path}: line {lineno}: expected 4 fields")
            try:
                rows.append(tuple(int(v) for v in parts))
            except ValueError as e:
                raise EventFormatError(f"{path}: line {lineno}: {e}") from None
    if rows:
        arr = np.array(rows, dtype=np.int64)
        t, x, y, p = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
        width = int(x.max()) + 1
        height = int(y.max()) + 1
    else:
        t = x = y = p = np.zeros(0, dtype=np.int64)
        width = height = 1
    return EventStream(width, height, t, x, y, p)


def read_events_csv(path, sensor_width: int, sensor_height: int) -> EventStream:
    """CSV reader with an explicit sensor geometry to validate against."""
    s = _read_events_csv(path)
    return EventStream(sensor_width, sensor_height, s.t, s.x, s.y, s.p)


def _write_events_csv(stream: EventStream, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(EVENT_CSV_HEADER + "\n")
        for i in range(len(stream)):
            f.write(f"{stream.t[i]},{stream.x[i]},{stream.y[i]},{stream.p[i]}\n")


def _read_events_evt1(path) -> EventStream:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != EVT1_MAGIC:
            raise EventFormatError(f"{path}: offset 0: bad magic {magic!r}")
        header = f.read(EVT1_HEADER.size)
        if len(header) != EVT1_HEADER.size:
            raise EventFormatError(f"{path}: truncated header")
        width, height, count = EVT1_HEADER.unpack(header)
        payload = f.read()
    expected = count * EVT1_RECORD_DTYPE.itemsize
    if len(payload) != expected:
        raise EventFormatError(
            f"{path}: offset {4 + EVT1_HEADER.size}: expected {expected} payload "
            f"bytes, got {len(payload)}"
        )
    rec = np.frombuffer(payload, dtype=EVT1_RECORD_DTYPE)
    return EventStream(
        width,
        height,
        rec["t"].astype(np.int64),
        rec["x"].astype(np.int32),
        rec["y"].astype(np.int32),
        rec["p"].astype(np.int8),
    )


def _write_events_evt1(stream: EventStream, path) -> None:
    rec = np.zeros(len(stream), dtype=EVT1_RECORD_DTYPE)
    rec["t"] = stream.t.astype(np.uint64)
    rec["x"] = stream.x.astype(np.uint16)
    rec["y"] = stream.y.astype(np.uint16)
    rec["p"] = stream.p
    with open(path, "wb") as f:
        f.write(EVT1_MAGIC)
        f.write(EVT1_HEADER.pack(stream.sensor_width, stream.sensor_height, len(stream)))
        f.write(rec.tobytes())


def read_pose_csv(path) -> PoseTrack:
    """Read a pose track; fill yaw_rate by central differences if absent."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        has_rate = header == POSE_CSV_HEADER + ",yaw_rate_rad_s"
        if not has_rate and header != POSE_CSV_HEADER:
            raise EventFormatError(f"{path}: line 1: unexpected header {header!r}")
        ts, yaws, rates = [], [], []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != (3 if has_rate else 2):
                raise EventFormatError(f"{path}: line {lineno}: wrong field count")
            try:
                ts.append(int(parts[0]))
                yaws.append(float(parts[1]))
                if has_rate:
                    rates.append(float(parts[2]))
            except ValueError as e:
                raise EventFormatError(f"{path}: line {lineno}: {e}") from None
    t = np.array(ts, dtype=np.int64)
    yaw = np.array(yaws, dtype=np.float64)
    if len(t) > 1 and np.any(np.diff(t) < 0):
        raise EventFormatError(f"{path}: pose timestamps decrease")
    if has_rate:
        return PoseTrack(t, yaw, np.array(rates))
    if len(t) < 2:
        return PoseTrack(t, yaw, np.zeros(len(t)), rate_filled=True, degenerate=True)
    rate = np.gradient(yaw, t.astype(np.float64) * 1e-6)
    return PoseTrack(t, yaw, rate, rate_filled=True)


def write_pose_csv(track: PoseTrack, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(POSE_CSV_HEADER + ",yaw_rate_rad_s\n")
        for i in range(len(track.t_us)):
            f.write(f"{track.t_us[i]},{track.yaw[i]:.12g},{track.yaw_rate[i]:.12g}\n")


def mirror_horizontal(stream: EventStream) -> EventStream:
    """Flip a stream left-right: x -> width - 1 - x, times unchanged."""
    return EventStream(
        stream.sensor_width,
        stream.sensor_height,
        stream.t.copy(),
        stream.sensor_width - 1 - stream.x,
        stream.y.copy(),
        stream.p.copy(),
    )


# ---------------------------------------------------------------------------
# Synthetic stimuli


def gen_moving_edge(spec: StimulusSpec) -> EventStream:
    """A vertical edge sweeping horizontally at constant pixel velocity.

    Each column emits one event per row at the instant the edge reaches it;
    for negative velocity the sweep starts from the right edge.
    """
    if spec.kind != "moving_edge":
        raise ValueError("spec.kind must be 'moving_edge'")
    v = spec.velocity_px_per_s
    if v == 0:
        raise ValueError("velocity_px_per_s must be nonzero")
    w, h = spec.sensor_width, spec.sensor_height
    cols = np.arange(w)
    if v > 0:
        t_col = np.rint(cols / v * 1e6).astype(np.int64)
    else:
        t_col = np.rint((w - 1 - cols) / (-v) * 1e6).astype(np.int64)
    keep = t_col <= spec.duration_us
    cols, t_col = cols[keep], t_col[keep]
    x = np.repeat(cols, h)
    t = np.repeat(t_col, h)
    y = np.tile(np.arange(h), len(cols))
    order = np.argsort(t, kind="stable")
    return EventStream(w, h, t[order], x[order], y[order], np.ones(len(t), dtype=np.int8))


def _yaw_grid(spec: StimulusSpec, grid_us: int = 1000) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample yaw_rate_fn on a uniform grid and integrate yaw (trapezoid)."""
    t_us = np.arange(0, spec.duration_us + grid_us, grid_us, dtype=np.int64)
    t_us[-1] = min(t_us[-1], spec.duration_us)
    t_us = np.unique(t_us)
    t_s = t_us.astype(np.float64) * 1e-6
    rate = np.array([spec.yaw_rate_fn(float(ts)) for ts in t_s])
    yaw = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t_s))])
    return t_us, rate, yaw


def gen_yaw_dots(spec: StimulusSpec, grid_us: int = 1000) -> tuple[EventStream, PoseTrack]:
    """Random static dots translating with the yaw-induced image velocity.

    Yaw maps to pure horizontal translation (small-angle, distant-scene
    approximation): a dot's unwrapped position is x0 + px_per_rad * yaw(t),
    wrapped modulo the sensor width. An event fires whenever a dot crosses
    a pixel boundary. The returned PoseTrack carries the exact yaw_rate_fn
    samples and the trapezoid-integrated heading.
    """
    if spec.kind != "yaw_dots":
        raise ValueError("spec.kind must be 'yaw_dots'")
    if spec.yaw_rate_fn is None:
        raise ValueError("yaw_dots requires yaw_rate_fn")
    w, h = spec.sensor_width, spec.sensor_height
    t_us, rate, yaw = _yaw_grid(spec, grid_us)
    track = PoseTrack(t_us, yaw, rate)

    rng = np.random.default_rng(spec.seed)
    n_dots = max(1, int(round(spec.dot_density * w * h)))
    x0 = rng.uniform(0.0, w, size=n_dots)
    y0 = rng.integers(0, h, size=n_dots)

    disp = spec.px_per_rad * yaw  # common unwrapped displacement on the grid
    t_s = t_us.astype(np.float64) * 1e-6
    ev_t, ev_x, ev_y = [], [], []
    for i in range(n_dots):
        ts, xs = _dot_crossings(x0[i], disp, t_s, w)
        ev_t.append(ts)
        ev_x.append(xs)
        ev_y.append(np.full(len(ts), y0[i], dtype=np.int64))
    t = np.concatenate(ev_t) if ev_t else np.zeros(0, dtype=np.int64)
    x = np.concatenate(ev_x) if ev_x else np.zeros(0, dtype=np.int64)
    y = np.concatenate(ev_y) if ev_y else np.zeros(0, dtype=np.int64)
    order = np.argsort(t, kind="stable")
    stream = EventStream(w, h, t[order], x[order], y[order], np.ones(len(t), dtype=np.int8))
    return stream, track


def _dot_crossings(x0: float, disp: np.ndarray, t_s: np.ndarray, width: int):
    """Pixel-boundary crossing times for one dot, linear within grid cells."""
    pos = x0 + disp
    ts_out, xs_out = [], []
    for j in range(len(pos) - 1):
        a, b = pos[j], pos[j + 1]
        if b > a:
            ms = np.arange(np.floor(a) + 1, np.floor(b) + 1)
            enter = ms  # entering pixel m when crossing boundary m rightward
        elif b < a:
            ms = np.arange(np.ceil(a) - 1, np.ceil(b) - 1, -1)
            enter = ms - 1  # entering pixel m-1 when crossing boundary m leftward
        else:
            continue
        if len(ms) == 0:
            continue
        frac = (ms - a) / (b - a)
        tc = t_s[j] + frac * (t_s[j + 1] - t_s[j])
        ts_out.append(np.rint(tc * 1e6).astype(np.int64))
        xs_out.append(np.mod(enter, width).astype(np.int64))
    if not ts_out:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(ts_out), np.concatenate(xs_out)
