"""Population readout: signed leaky integration of spike trains.

LR-population spikes push the activity variable up, RL spikes push it
down; the result, normalised to its maximum absolute value, is the
network's yaw-rate estimate. Heading is its time integral.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence, Union

import numpy as np

from .events import PoseTrack
from .network import Orientation, SpikeTrain

LabelMap = Union[Mapping[int, Orientation], np.ndarray]


@dataclass
class ActivityTrace:
    """Uniformly sampled activity signal A.

    ``samples[k]`` is the value at ``t0_us + (k + 1) * dt`` (step ends,
    matching the spike timestamps of the network executor).
    """

    dt: float  # s
    t0_us: int
    samples: np.ndarray
    normalized: bool = False
    norm_constant: float = 0.0
    degenerate: bool = False

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)

    def times_us(self) -> np.ndarray:
        return self.t0_us + ((np.arange(len(self.samples)) + 1) * (self.dt * 1e6)).astype(
            np.int64
        )


def _orientation_codes(spikes: SpikeTrain, labels: LabelMap) -> np.ndarray:
    """Resolve per-spike orientation: 0 = LR, 1 = RL."""
    if isinstance(labels, np.ndarray):
        if len(spikes) and spikes.unit_id.max(initial=-1) >= len(labels):
            raise KeyError(f"spike references unlabeled unit {int(spikes.unit_id.max())}")
        return labels[spikes.unit_id] if len(spikes) else np.zeros(0, dtype=np.int8)
    codes = np.empty(len(spikes), dtype=np.int8)
    for i, uid in enumerate(spikes.unit_id):
        try:
            codes[i] = 0 if labels[int(uid)] is Orientation.LR else 1
        except KeyError:
            raise KeyError(f"spike references unlabeled unit {int(uid)}") from None
    return codes


def integrate_diff(
    spikes: SpikeTrain,
    labels: LabelMap,
    tau_a: float,
    dt: float,
    duration_us: int,
    t0_us: int = 0,
) -> ActivityTrace:
    """Euler-integrate tau_A dA/dt = -A + sum(LR) - sum(RL).

    Each LR spike adds 1/tau_A to A, each RL spike subtracts it, and A
    decays with time constant tau_A between spikes.
    """
    if tau_a <= 0:
        raise ValueError("tau_a must be positive")
    dt_us = dt * 1e6
    n = int(np.ceil((duration_us - t0_us) / dt_us))
    codes = _orientation_codes(spikes, labels)
    # Spikes are stamped at step ends; sample k covers (t0 + k dt, t0 + (k+1) dt].
    bins = np.ceil((spikes.t_us - t0_us) / dt_us).astype(np.int64) - 1
    bins = np.clip(bins, 0, n - 1)
    drive = np.zeros(n)
    signs = np.where(codes == 0, 1.0, -1.0)
    np.add.at(drive, bins, signs)
    decay = 1.0 - dt / tau_a
    # A[k] = decay * A[k-1] + drive[k] / tau_a, as a first-order IIR filter.
    from scipy.signal import lfilter

    samples = lfilter([1.0 / tau_a], [1.0, -decay], drive)
    return ActivityTrace(dt=dt, t0_us=t0_us, samples=samples)


def combine(traces: Sequence[ActivityTrace]) -> ActivityTrace:
    """Pointwise sum of raw traces on the same sampling grid."""
    if not traces:
        raise ValueError("no traces to combine")
    first = traces[0]
    total = np.zeros_like(first.samples)
    for t in traces:
        if t.normalized:
            raise ValueError("combine expects raw traces")
        if t.dt != first.dt or t.t0_us != first.t0_us or len(t.samples) != len(first.samples):
            raise ValueError("traces are on mismatched sampling grids")
        total = total + t.samples
    return ActivityTrace(dt=first.dt, t0_us=first.t0_us, samples=total)


def normalize(trace: ActivityTrace) -> ActivityTrace:
    """Divide by the whole-sample maximum absolute value (offline mode)."""
    if trace.normalized:
        raise ValueError("trace is already normalized")
    peak = float(np.max(np.abs(trace.samples))) if len(trace.samples) else 0.0
    if peak == 0.0:
        return replace(trace, normalized=True, norm_constant=0.0, degenerate=True)
    return replace(
        trace, samples=trace.samples / peak, normalized=True, norm_constant=peak
    )


def normalize_causal(trace: ActivityTrace) -> ActivityTrace:
    """Running-max variant: each sample divided by the max |A| seen so far.

    Non-default; offline normalization is the reference behaviour.
    """
    if trace.normalized:
        raise ValueError("trace is already normalized")
    running = np.maximum.accumulate(np.abs(trace.samples))
    if len(running) == 0 or running[-1] == 0.0:
        return replace(trace, normalized=True, norm_constant=0.0, degenerate=True)
    safe = np.where(running > 0, running, 1.0)
    return replace(
        trace,
        samples=trace.samples / safe,
        normalized=True,
        norm_constant=float(running[-1]),
    )


def integrate_heading(trace: ActivityTrace, scale: float) -> PoseTrack:
    """Accumulate heading: yaw_rate = scale * A, yaw by trapezoid."""
    if not np.isfinite(scale):
        raise ValueError("scale must be finite")
    rate = scale * trace.samples
    t_us = trace.times_us()
    if len(rate) == 0:
        return PoseTrack(t_us, np.zeros(0), rate)
    t_s = t_us.astype(np.float64) * 1e-6
    yaw = np.concatenate([[rate[0] * trace.dt], np.zeros(len(rate) - 1)])
    if len(rate) > 1:
        yaw[1:] = 0.5 * (rate[1:] + rate[:-1]) * np.diff(t_s)
    yaw = np.cumsum(yaw)
    return PoseTrack(t_us, yaw, rate)
