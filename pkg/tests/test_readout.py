import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tde_egomotion.network import Orientation, SpikeTrain
from tde_egomotion.readout import (
    ActivityTrace,
    combine,
    integrate_diff,
    integrate_heading,
    normalize,
    normalize_causal,
)

TAU_A = 0.75
DT = 1e-3


def train(times, units):
    return SpikeTrain(np.asarray(times, dtype=np.int64), np.asarray(units, dtype=np.int64))


LABELS = {0: Orientation.LR, 1: Orientation.RL}


class TestIntegrateDiff:
    def test_empty_train_stays_zero(self):
        trace = integrate_diff(train([], []), LABELS, TAU_A, DT, 100_000)
        assert np.all(trace.samples == 0)

    def test_single_lr_spike_jump_and_decay(self):
        trace = integrate_diff(train([1000], [0]), LABELS, TAU_A, DT, 200_000)
        assert trace.samples[0] == pytest.approx(1.0 / TAU_A)
        # one decay step later
        assert trace.samples[1] == pytest.approx((1.0 / TAU_A) * (1.0 - DT / TAU_A))

    def test_rl_spike_is_negative(self):
        trace = integrate_diff(train([1000], [1]), LABELS, TAU_A, DT, 100_000)
        assert trace.samples[0] == pytest.approx(-1.0 / TAU_A)

    def test_balanced_pair_cancels(self):
        trace = integrate_diff(train([1000, 1000], [0, 1]), LABELS, TAU_A, DT, 100_000)
        assert np.all(trace.samples == 0)

    def test_decay_over_one_tau(self):
        n_us = int((TAU_A + 0.01) * 1e6)
        trace = integrate_diff(train([1000], [0]), LABELS, TAU_A, DT, n_us)
        k = int(TAU_A / DT)
        expected = (1.0 / TAU_A) * (1.0 - DT / TAU_A) ** (k - 1)
        assert trace.samples[k - 1] == pytest.approx(expected, rel=1e-9)
        assert expected == pytest.approx((1.0 / TAU_A) * math.exp(-1), rel=2e-3)

    def test_array_label_codes(self):
        codes = np.array([0, 1], dtype=np.int8)
        a = integrate_diff(train([1000, 2000], [0, 1]), codes, TAU_A, DT, 100_000)
        b = integrate_diff(train([1000, 2000], [0, 1]), LABELS, TAU_A, DT, 100_000)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_unlabeled_unit_rejected(self):
        with pytest.raises(KeyError, match="unlabeled unit 7"):
            integrate_diff(train([1000], [7]), LABELS, TAU_A, DT, 100_000)

    def test_bad_tau(self):
        with pytest.raises(ValueError):
            integrate_diff(train([], []), LABELS, 0.0, DT, 100_000)

    def test_spike_at_step_end_lands_in_that_step(self):
        # Executor stamps spikes at step ends; a spike at exactly k*dt
        # belongs to sample k-1.
        trace = integrate_diff(train([3000], [0]), LABELS, TAU_A, DT, 100_000)
        assert trace.samples[1] == 0.0
        assert trace.samples[2] == pytest.approx(1.0 / TAU_A)

    @given(
        n=st.integers(1, 40),
        seed=st.integers(0, 2**31),
    )
    @settings(max_examples=25, deadline=None)
    def test_linearity_in_spike_count(self, n, seed):
        rng = np.random.default_rng(seed)
        times = np.sort(rng.integers(1, 90_000, n))
        units = rng.integers(0, 2, n)
        full = integrate_diff(train(times, units), LABELS, TAU_A, DT, 100_000)
        parts = [
            integrate_diff(train([t], [u]), LABELS, TAU_A, DT, 100_000)
            for t, u in zip(times, units)
        ]
        np.testing.assert_allclose(
            full.samples, np.sum([p.samples for p in parts], axis=0), atol=1e-12
        )


class TestCombine:
    def test_sums_pointwise(self):
        a = integrate_diff(train([1000], [0]), LABELS, TAU_A, DT, 50_000)
        b = integrate_diff(train([2000], [1]), LABELS, TAU_A, DT, 50_000)
        c = combine([a, b])
        np.testing.assert_allclose(c.samples, a.samples + b.samples)

    def test_rejects_normalized_input(self):
        a = normalize(integrate_diff(train([1000], [0]), LABELS, TAU_A, DT, 50_000))
        with pytest.raises(ValueError, match="raw"):
            combine([a])

    def test_rejects_mismatched_grids(self):
        a = ActivityTrace(dt=1e-3, t0_us=0, samples=np.zeros(10))
        b = ActivityTrace(dt=2e-3, t0_us=0, samples=np.zeros(10))
        with pytest.raises(ValueError, match="grid"):
            combine([a, b])

    def test_empty_list(self):
        with pytest.raises(ValueError):
            combine([])


class TestNormalize:
    def test_peak_becomes_unit(self):
        t = ActivityTrace(dt=DT, t0_us=0, samples=np.array([0.5, -2.0, 1.0]))
        n = normalize(t)
        assert np.max(np.abs(n.samples)) == 1.0
        assert n.norm_constant == 2.0
        assert n.normalized

    def test_double_normalize_rejected(self):
        t = normalize(ActivityTrace(dt=DT, t0_us=0, samples=np.array([1.0])))
        with pytest.raises(ValueError, match="already"):
            normalize(t)

    def test_all_zero_flagged_degenerate(self):
        n = normalize(ActivityTrace(dt=DT, t0_us=0, samples=np.zeros(5)))
        assert n.degenerate
        assert np.all(n.samples == 0)

    def test_causal_uses_running_peak(self):
        t = ActivityTrace(dt=DT, t0_us=0, samples=np.array([0.5, 1.0, 2.0, 1.0]))
        n = normalize_causal(t)
        np.testing.assert_allclose(n.samples, [1.0, 1.0, 1.0, 0.5])
        assert n.norm_constant == 2.0

    def test_causal_matches_offline_at_end_after_peak(self):
        rng = np.random.default_rng(0)
        s = rng.normal(size=100)
        s[10] = 5.0  # global peak early on
        t = ActivityTrace(dt=DT, t0_us=0, samples=s)
        off = normalize(t)
        caus = normalize_causal(ActivityTrace(dt=DT, t0_us=0, samples=s))
        np.testing.assert_allclose(caus.samples[10:], off.samples[10:])


class TestIntegrateHeading:
    def test_constant_rate_linear_heading(self):
        n = 1000
        t = ActivityTrace(dt=DT, t0_us=0, samples=np.ones(n))
        track = integrate_heading(t, scale=0.2)
        assert np.all(track.yaw_rate == 0.2)
        assert track.yaw[-1] == pytest.approx(0.2 * n * DT, rel=1e-9)

    def test_zero_scale_gives_flat_heading(self):
        t = ActivityTrace(dt=DT, t0_us=0, samples=np.ones(100))
        track = integrate_heading(t, scale=0.0)
        assert np.all(track.yaw == 0)

    def test_sinusoid_matches_analytic_integral(self):
        n = 4000
        ts = (np.arange(n) + 1) * DT
        omega = 2 * np.pi / 2.0
        t = ActivityTrace(dt=DT, t0_us=0, samples=np.sin(omega * ts))
        track = integrate_heading(t, scale=1.0)
        expected = (1 - np.cos(omega * ts)) / omega
        np.testing.assert_allclose(track.yaw, expected, atol=5e-4)

    def test_nonfinite_scale_rejected(self):
        t = ActivityTrace(dt=DT, t0_us=0, samples=np.ones(4))
        with pytest.raises(ValueError):
            integrate_heading(t, scale=float("nan"))

    def test_times_align_with_trace(self):
        t = ActivityTrace(dt=DT, t0_us=5000, samples=np.ones(3))
        track = integrate_heading(t, scale=1.0)
        np.testing.assert_array_equal(track.t_us, t.times_us())
