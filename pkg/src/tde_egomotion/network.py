"""TDE populations over the pixel grid and the feed-forward executor.

Orientation convention: an LR-sensitive unit has its FAC port on the left
pixel and its TRG port ``stride`` pixels to the right, so left-then-right
stimulation facilitates and then triggers. RL mirrors this.

The executor is time-driven at the configured step size. Events are
binned to steps; within a step all FAC increments land first, then all
TRG increments, then one Euler step per unit. Unit updates are
independent, so output is bit-identical for any partitioning of units
across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

import numpy as np

from .events import EventStream
from .tde import TdeParams


class Orientation(Enum):
    LR = "LR"  # left-to-right sensitive: FAC left, TRG right
    RL = "RL"  # right-to-left sensitive: FAC right, TRG left


@dataclass(frozen=True)
class UnitPlacement:
    unit_id: int
    orientation: Orientation
    fac_px: tuple[int, int]
    trg_px: tuple[int, int]
    stride: int

    def __post_init__(self) -> None:
        fx, fy = self.fac_px
        tx, ty = self.trg_px
        if fy != ty:
            raise ValueError("FAC and TRG pixels must share a row")
        if abs(fx - tx) != self.stride:
            raise ValueError("port separation must equal the stride")
        expected = fx + self.stride if self.orientation is Orientation.LR else fx - self.stride
        if tx != expected:
            raise ValueError("orientation inconsistent with port order")


@dataclass(frozen=True)
class OutputSpike:
    t: int  # microseconds, end of the emitting step
    unit_id: int


@dataclass
class SpikeTrain:
    """Network output spikes as parallel arrays, sorted by (t, unit_id)."""

    t_us: np.ndarray  # int64
    unit_id: np.ndarray  # int64

    def __len__(self) -> int:
        return len(self.t_us)

    def __iter__(self) -> Iterator[OutputSpike]:
        for i in range(len(self)):
            yield OutputSpike(int(self.t_us[i]), int(self.unit_id[i]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return np.array_equal(self.t_us, other.t_us) and np.array_equal(
            self.unit_id, other.unit_id
        )


@dataclass
class NetworkConfig:
    """A TDE population wired to a sensor, stored as parallel arrays.

    ``unit_id`` is the array index. ``orientation`` holds 0 for LR and 1
    for RL; ``box`` holds a per-unit group label index into ``box_names``.
    """

    sensor_width: int
    sensor_height: int
    fac_x: np.ndarray
    fac_y: np.ndarray
    trg_x: np.ndarray
    trg_y: np.ndarray
    orientation: np.ndarray  # int8: 0 = LR, 1 = RL
    stride: int
    params: TdeParams = field(default_factory=TdeParams)
    dt: float = 0.1e-3  # s
    box: Optional[np.ndarray] = None  # int16 index into box_names
    box_names: tuple[str, ...] = ("full",)

    def __post_init__(self) -> None:
        for name in ("fac_x", "fac_y", "trg_x", "trg_y"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.int32))
        self.orientation = np.asarray(self.orientation, dtype=np.int8)
        if self.box is None:
            self.box = np.zeros(self.n_units, dtype=np.int16)
        else:
            self.box = np.asarray(self.box, dtype=np.int16)
        self.validate()

    @property
    def n_units(self) -> int:
        return len(self.fac_x)

    def validate(self) -> None:
        w, h = self.sensor_width, self.sensor_height
        for name in ("fac_x", "trg_x"):
            a = getattr(self, name)
            if np.any((a < 0) | (a >= w)):
                raise ValueError(f"{name} outside sensor bounds")
        for name in ("fac_y", "trg_y"):
            a = getattr(self, name)
            if np.any((a < 0) | (a >= h)):
                raise ValueError(f"{name} outside sensor bounds")
        if np.any(self.fac_y != self.trg_y):
            raise ValueError("FAC and TRG pixels must share a row")
        sign = np.where(self.orientation == 0, 1, -1)
        if np.any(self.trg_x - self.fac_x != sign * self.stride):
            raise ValueError("port separation inconsistent with orientation/stride")
        if self.dt <= 0 or self.dt >= self.params.min_tau / 2:
            raise ValueError("dt must be positive and below min(tau)/2")

    @property
    def placements(self) -> list[UnitPlacement]:
        out = []
        for i in range(self.n_units):
            out.append(
                UnitPlacement(
                    i,
                    Orientation.LR if self.orientation[i] == 0 else Orientation.RL,
                    (int(self.fac_x[i]), int(self.fac_y[i])),
                    (int(self.trg_x[i]), int(self.trg_y[i])),
                    self.stride,
                )
            )
        return out

    @property
    def labels(self) -> dict[int, tuple[str, Orientation]]:
        return {
            i: (
                self.box_names[self.box[i]],
                Orientation.LR if self.orientation[i] == 0 else Orientation.RL,
            )
            for i in range(self.n_units)
        }

    def orientation_map(self) -> np.ndarray:
        """Per-unit orientation codes (0 = LR, 1 = RL) for the readout."""
        return self.orientation.copy()

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return {
            "sensor_width": self.sensor_width,
            "sensor_height": self.sensor_height,
            "fac_x": self.fac_x.tolist(),
            "fac_y": self.fac_y.tolist(),
            "trg_x": self.trg_x.tolist(),
            "trg_y": self.trg_y.tolist(),
            "orientation": self.orientation.tolist(),
            "stride": self.stride,
            "params": asdict(self.params),
            "dt": self.dt,
            "box": self.box.tolist(),
            "box_names": list(self.box_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(
            sensor_width=d["sensor_width"],
            sensor_height=d["sensor_height"],
            fac_x=np.array(d["fac_x"]),
            fac_y=np.array(d["fac_y"]),
            trg_x=np.array(d["trg_x"]),
            trg_y=np.array(d["trg_y"]),
            orientation=np.array(d["orientation"]),
            stride=d["stride"],
            params=TdeParams(**d["params"]),
            dt=d["dt"],
            box=np.array(d["box"]),
            box_names=tuple(d["box_names"]),
        )


BOX_SIZE = 20
BOX_OFFSET = 100  # pixels from the horizontal center
UNITS_PER_BOX = 100


def build_two_box(
    seed: int,
    sensor_width: int = 346,
    sensor_height: int = 260,
    stride: int = 2,
    params: Optional[TdeParams] = None,
    dt: float = 0.1e-3,
) -> NetworkConfig:
    """Two 20x20 sample boxes, vertically centered, offset +-100 px in x.

    Each box holds 100 units (50 LR + 50 RL) placed uniformly at random
    such that both ports stay inside the box; both boxes share the
    identical intra-box placement. Duplicate placements are allowed.
    """
    cx, cy = sensor_width // 2, sensor_height // 2
    half = BOX_SIZE // 2
    y0 = cy - half
    x0_left, x0_right = cx - BOX_OFFSET - half, cx + BOX_OFFSET - half
    if x0_left < 0 or x0_right + BOX_SIZE > sensor_width or y0 < 0 or y0 + BOX_SIZE > sensor_height:
        raise ValueError("sample boxes do not fit the sensor geometry")
    if stride >= BOX_SIZE:
        raise ValueError("stride too large for the box size")

    rng = np.random.default_rng(seed)
    n_half = UNITS_PER_BOX // 2
    # Relative anchor = FAC pixel within the box; valid range keeps both
    # ports inside the box.
    lr_fx = rng.integers(0, BOX_SIZE - stride, size=n_half)
    lr_fy = rng.integers(0, BOX_SIZE, size=n_half)
    rl_fx = rng.integers(stride, BOX_SIZE, size=n_half)
    rl_fy = rng.integers(0, BOX_SIZE, size=n_half)
    rel_fx = np.concatenate([lr_fx, rl_fx])
    rel_fy = np.concatenate([lr_fy, rl_fy])
    orient = np.concatenate([np.zeros(n_half, dtype=np.int8), np.ones(n_half, dtype=np.int8)])
    rel_tx = rel_fx + np.where(orient == 0, stride, -stride)

    fac_x = np.concatenate([rel_fx + x0_left, rel_fx + x0_right])
    trg_x = np.concatenate([rel_tx + x0_left, rel_tx + x0_right])
    fac_y = np.tile(rel_fy + y0, 2)
    orientation = np.tile(orient, 2)
    box = np.repeat(np.array([0, 1], dtype=np.int16), UNITS_PER_BOX)
    return NetworkConfig(
        sensor_width=sensor_width,
        sensor_height=sensor_height,
        fac_x=fac_x,
        fac_y=fac_y,
        trg_x=trg_x,
        trg_y=fac_y.copy(),
        orientation=orientation,
        stride=stride,
        params=params or TdeParams(),
        dt=dt,
        box=box,
        box_names=("left", "right"),
    )


def build_dense(
    sensor_width: int,
    sensor_height: int,
    stride: int = 2,
    params: Optional[TdeParams] = None,
    dt: float = 0.1e-3,
) -> NetworkConfig:
    """Densely sample the whole field: one LR and one RL unit per anchor.

    Anchors run over 0 <= x <= width-1-stride for every row, giving
    2 * (width - stride) * height units.
    """
    if stride >= sensor_width:
        raise ValueError("stride must be smaller than the sensor width")
    ax, ay = np.meshgrid(
        np.arange(sensor_width - stride), np.arange(sensor_height), indexing="ij"
    )
    ax, ay = ax.ravel(), ay.ravel()
    n = len(ax)
    # Interleave LR/RL per anchor: unit 2k is LR, 2k+1 is RL.
    fac_x = np.empty(2 * n, dtype=np.int32)
    trg_x = np.empty(2 * n, dtype=np.int32)
    fac_y = np.repeat(ay, 2).astype(np.int32)
    orientation = np.tile(np.array([0, 1], dtype=np.int8), n)
    fac_x[0::2] = ax
    trg_x[0::2] = ax + stride
    fac_x[1::2] = ax + stride
    trg_x[1::2] = ax
    return NetworkConfig(
        sensor_width=sensor_width,
        sensor_height=sensor_height,
        fac_x=fac_x,
        fac_y=fac_y,
        trg_x=trg_x,
        trg_y=fac_y.copy(),
        orientation=orientation,
        stride=stride,
        params=params or TdeParams(),
        dt=dt,
    )


FAC_PORT = "FAC"
TRG_PORT = "TRG"


def route(config: NetworkConfig) -> dict[tuple[int, int], list[tuple[int, str]]]:
    """Inverse map pixel -> [(unit_id, port), ...] over both ports."""
    index: dict[tuple[int, int], list[tuple[int, str]]] = {}
    for i in range(config.n_units):
        index.setdefault((int(config.fac_x[i]), int(config.fac_y[i])), []).append((i, FAC_PORT))
        index.setdefault((int(config.trg_x[i]), int(config.trg_y[i])), []).append((i, TRG_PORT))
    return index


def _segment_arange(lens: np.ndarray) -> np.ndarray:
    # [0..lens[0]-1, 0..lens[1]-1, ...] without a python loop
    total = int(lens.sum())
    out = np.arange(total, dtype=np.int64)
    starts = np.repeat(np.cumsum(lens) - lens, lens)
    return out - starts


def _expand_port(pix_of_port: np.ndarray, event_pix: np.ndarray, event_step: np.ndarray):
    """For each event, emit one (step, unit) entry per port bound to its pixel."""
    order = np.argsort(pix_of_port, kind="stable")
    sorted_pix = pix_of_port[order]
    start = np.searchsorted(sorted_pix, event_pix, "left")
    end = np.searchsorted(sorted_pix, event_pix, "right")
    lens = end - start
    idx = np.repeat(start, lens) + _segment_arange(lens)
    units = order[idx]
    steps = np.repeat(event_step, lens)
    return steps, units


def run(
    stream: EventStream,
    config: NetworkConfig,
    duration_us: Optional[int] = None,
    workers: int = 1,
) -> SpikeTrain:
    """Execute the network over an event stream.

    Polarity is ignored: both polarities drive both ports identically.
    The spike train is independent of ``workers``; partitions are merged
    by (t, unit_id).
    """
    if stream.sensor_width != config.sensor_width or stream.sensor_height != config.sensor_height:
        raise ValueError("stream geometry does not match the network config")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    dt_us = config.dt * 1e6
    if duration_us is None:
        last = int(stream.t[-1]) if len(stream) else 0
        duration_us = last + 200_000  # tail for post-stimulus bursting
    n_steps = int(np.ceil(duration_us / dt_us))

    w = config.sensor_width
    event_pix = stream.y.astype(np.int64) * w + stream.x
    event_step = np.minimum(
        np.floor(stream.t / dt_us).astype(np.int64), n_steps - 1
    )
    fac_pix = config.fac_y.astype(np.int64) * w + config.fac_x
    trg_pix = config.trg_y.astype(np.int64) * w + config.trg_x
    f_steps, f_units = _expand_port(fac_pix, event_pix, event_step)
    g_steps, g_units = _expand_port(trg_pix, event_pix, event_step)

    bounds = np.linspace(0, config.n_units, workers + 1).astype(np.int64)
    all_t, all_u = [], []
    for k in range(workers):
        lo, hi = int(bounds[k]), int(bounds[k + 1])
        if hi <= lo:
            continue
        t_arr, u_arr = _run_unit_range(
            lo, hi, n_steps, config, f_steps, f_units, g_steps, g_units, dt_us
        )
        all_t.append(t_arr)
        all_u.append(u_arr)
    t_all = np.concatenate(all_t) if all_t else np.zeros(0, dtype=np.int64)
    u_all = np.concatenate(all_u) if all_u else np.zeros(0, dtype=np.int64)
    order = np.lexsort((u_all, t_all))
    return SpikeTrain(t_all[order], u_all[order])


def _run_unit_range(
    lo: int,
    hi: int,
    n_steps: int,
    config: NetworkConfig,
    f_steps: np.ndarray,
    f_units: np.ndarray,
    g_steps: np.ndarray,
    g_units: np.ndarray,
    dt_us: float,
):
    """Advance units [lo, hi) over all steps; matches tde.step_euler bitwise."""
    p = config.params
    dt = config.dt
    mask = (f_units >= lo) & (f_units < hi)
    fs, fu = f_steps[mask], (f_units[mask] - lo)
    mask = (g_units >= lo) & (g_units < hi)
    gs, gu = g_steps[mask], (g_units[mask] - lo)
    steps_axis = np.arange(n_steps + 1)
    f_bounds = np.searchsorted(fs, steps_axis)
    g_bounds = np.searchsorted(gs, steps_axis)

    n = hi - lo
    i_fac = np.zeros(n)
    i_trg = np.zeros(n)
    u = np.zeros(n)
    refrac_until = np.full(n, -np.inf)
    buf = np.empty(n)
    fac_k = 1.0 - dt / p.tau_fac
    trg_k = 1.0 - dt / p.tau_trg
    tref_us = p.t_ref * 1e6
    spikes_t: list[np.ndarray] = []
    spikes_u: list[np.ndarray] = []

    # Nothing can move before the first event reaches a port.
    first = n_steps
    if len(fs):
        first = min(first, int(fs[0]))
    if len(gs):
        first = min(first, int(gs[0]))

    for step in range(first, n_steps):
        a, b = f_bounds[step], f_bounds[step + 1]
        if b > a:
            np.add.at(i_fac, fu[a:b], p.w_fac)
        a, b = g_bounds[step], g_bounds[step + 1]
        if b > a:
            tu = gu[a:b]
            np.add.at(i_trg, tu, i_fac[tu] * p.w_trg)
        i_fac *= fac_k
        i_trg *= trg_k
        start = step * dt_us
        now = (step + 1) * dt_us
        np.multiply(i_trg, p.gain, out=buf)
        buf -= u / p.tau_m
        buf *= dt
        u += buf
        refr = start < refrac_until
        if refr.any():
            u[refr] = 0.0
        fired = u >= p.u_theta
        if fired.any():
            ids = np.nonzero(fired)[0]
            u[ids] = 0.0
            refrac_until[ids] = now + tref_us
            spikes_t.append(np.full(len(ids), int(round(now)), dtype=np.int64))
            spikes_u.append((ids + lo).astype(np.int64))

    if spikes_t:
        return np.concatenate(spikes_t), np.concatenate(spikes_u)
    return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
