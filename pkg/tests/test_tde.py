import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tde_egomotion.tde import (
    TdeParams,
    TdeState,
    decay_exact,
    on_fac,
    on_trg,
    run_pair_sweep,
    step_euler,
    trg_jump,
)

PARAMS = TdeParams()
SUBTHRESHOLD = TdeParams(u_theta=1e30)  # traces only, no spiking


class TestPortEvents:
    def test_fac_increments(self):
        s = on_fac(TdeState(), PARAMS)
        assert s.i_fac == 1.0

    def test_fac_superposes(self):
        s = on_fac(on_fac(TdeState(), PARAMS), PARAMS)
        assert s.i_fac == 2.0

    def test_fac_decay_one_tau(self):
        s = on_fac(TdeState(), PARAMS)
        s = decay_exact(s, PARAMS, PARAMS.tau_fac)
        assert s.i_fac == pytest.approx(math.exp(-1), rel=1e-12)

    def test_trg_without_fac_is_inert(self):
        s = on_trg(TdeState(), PARAMS)
        assert s.i_trg == 0.0

    def test_trg_unit_gate(self):
        s = on_trg(TdeState(i_fac=1.0), PARAMS)
        assert s.i_trg == 1.0

    def test_trg_reads_fac_without_consuming(self):
        s = on_trg(TdeState(i_fac=1.0), PARAMS)
        assert s.i_fac == 1.0

    def test_pair_jump_follows_exponential_law(self):
        s = on_fac(TdeState(), PARAMS)
        s = decay_exact(s, PARAMS, 20e-3)
        before = s.i_trg
        s = on_trg(s, PARAMS)
        assert s.i_trg - before == pytest.approx(math.exp(-1), rel=1e-12)


class TestStepEuler:
    def test_zero_state_fixed_point(self):
        s, spiked = step_euler(TdeState(), PARAMS, 1e-4, 100.0)
        assert s == TdeState()
        assert not spiked

    def test_single_step_membrane(self):
        dt = 1e-4
        s, _ = step_euler(TdeState(i_trg=1.0), SUBTHRESHOLD, dt, 100.0)
        # one Euler step from u=0: gain * i_trg(after decay) * dt
        assert s.u == pytest.approx(SUBTHRESHOLD.gain * (1 - dt / SUBTHRESHOLD.tau_trg) * dt)

    def test_unstable_dt_rejected(self):
        with pytest.raises(ValueError, match="unstable"):
            step_euler(TdeState(), PARAMS, PARAMS.min_tau / 2, 100.0)

    def test_spike_resets_and_sets_refractory(self):
        s = TdeState(i_trg=10.0, u=PARAMS.u_theta - 1e-9)
        s, spiked = step_euler(s, PARAMS, 1e-4, 100.0)
        assert spiked
        assert s.u == 0.0
        assert s.refrac_until == pytest.approx(100.0 + PARAMS.t_ref * 1e6)

    def test_refractory_holds_u_at_zero(self):
        s = TdeState(i_trg=10.0, refrac_until=150.0)
        s, spiked = step_euler(s, PARAMS, 1e-4, 100.0)
        assert s.u == 0.0
        assert not spiked

    def test_fine_step_self_consistency_coincident_pair(self):
        # Burst pacing is quantized by the refractory window, so counts
        # shift a little with dt; require agreement to 20%.
        coarse = run_pair_sweep([0.0], PARAMS, dt=1e-4)[0]
        fine = run_pair_sweep([0.0], PARAMS, dt=1e-6)[0]
        assert abs(coarse.spike_count - fine.spike_count) <= 0.2 * fine.spike_count


class TestDecayExact:
    def test_zero_interval_identity(self):
        s = TdeState(i_fac=0.5, i_trg=0.25, u=3.0)
        assert decay_exact(s, PARAMS, 0.0) == s

    def test_trace_decay(self):
        s = decay_exact(TdeState(i_fac=1.0), PARAMS, 20e-3)
        assert s.i_fac == pytest.approx(math.exp(-1), rel=1e-12)

    def test_degenerate_membrane_closed_form(self):
        p = TdeParams(gain=1.0, u_theta=1e30)
        s = decay_exact(TdeState(i_trg=1.0), p, 20e-3)
        assert s.u == pytest.approx(0.020 * math.exp(-1), rel=1e-12)

    def test_degenerate_form_matches_fine_euler(self):
        p = TdeParams(gain=1.0, u_theta=1e30)
        dt = 1e-6
        s = TdeState(i_trg=1.0)
        for step in range(20_000):
            s, _ = step_euler(s, p, dt, (step + 1) * dt * 1e6)
        exact = decay_exact(TdeState(i_trg=1.0), p, 20e-3)
        assert s.u == pytest.approx(exact.u, rel=1e-3)

    def test_distinct_taus_matches_fine_euler(self):
        p = TdeParams(tau_m=10e-3, gain=1.0, u_theta=1e30)
        dt = 1e-6
        s = TdeState(i_trg=1.0, u=0.5)
        for step in range(15_000):
            s, _ = step_euler(s, p, dt, (step + 1) * dt * 1e6)
        exact = decay_exact(TdeState(i_trg=1.0, u=0.5), p, 15e-3)
        assert s.u == pytest.approx(exact.u, rel=1e-3)

    def test_negative_interval_rejected(self):
        with pytest.raises(ValueError):
            decay_exact(TdeState(), PARAMS, -1e-3)


class TestPairSweep:
    def test_counts_nonincreasing(self):
        res = run_pair_sweep([0.0, 0.02, 0.04, 0.06, 0.08], PARAMS)
        counts = [r.spike_count for r in res]
        assert counts == sorted(counts, reverse=True)
        assert counts[0] >= 5

    def test_latency_nondecreasing_over_spiking_range(self):
        res = run_pair_sweep([0.0, 0.02, 0.04, 0.06, 0.08], PARAMS)
        lats = [r.first_spike_latency for r in res if r.spike_count > 0]
        assert lats == sorted(lats)

    def test_latency_present_iff_spiking(self):
        for r in run_pair_sweep([0.0, 0.3], PARAMS):
            assert (r.first_spike_latency is not None) == (r.spike_count > 0)

    def test_far_pair_is_silent(self):
        # Past the threshold condition from the closed form, no spikes.
        r = run_pair_sweep([0.5], PARAMS)[0]
        assert r.spike_count == 0
        assert r.first_spike_latency is None

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError):
            run_pair_sweep([-0.01], PARAMS)


class TestInvariants:
    def test_gating_no_fac_no_spikes(self):
        dt = 1e-4
        s = TdeState()
        spiked_any = False
        for step in range(2000):
            if step % 10 == 0:
                s = on_trg(s, PARAMS)
            s, spiked = step_euler(s, PARAMS, dt, (step + 1) * 100.0)
            spiked_any |= spiked
        assert not spiked_any

    def test_exponential_law_regression(self):
        deltas = np.arange(0.0, 0.081, 0.01)
        jumps = np.array([trg_jump(d, PARAMS) for d in deltas])
        slope, intercept = np.polyfit(deltas, np.log(jumps), 1)
        fit = slope * deltas + intercept
        ss_res = np.sum((np.log(jumps) - fit) ** 2)
        ss_tot = np.sum((np.log(jumps) - np.log(jumps).mean()) ** 2)
        assert slope == pytest.approx(-1 / PARAMS.tau_fac, rel=1e-6)
        assert 1 - ss_res / ss_tot > 0.999

    def test_euler_error_halves_with_dt(self):
        def traces(dt):
            n = int(round(0.2 / dt))
            trg_bin = int(0.02 / dt)
            dt_us = dt * 1e6
            s = TdeState()
            out = {}
            for step in range(n):
                if step == 0:
                    s = on_fac(s, SUBTHRESHOLD)
                if step == trg_bin:
                    s = on_trg(s, SUBTHRESHOLD)
                s, _ = step_euler(s, SUBTHRESHOLD, dt, (step + 1) * dt_us)
                out[round((step + 1) * dt * 1e6)] = s
            return out

        def maxdev(a, b):
            common = sorted(set(a) & set(b))
            return max(
                max(
                    abs(a[t].i_fac - b[t].i_fac),
                    abs(a[t].i_trg - b[t].i_trg),
                    abs(a[t].u - b[t].u) / SUBTHRESHOLD.gain,
                )
                for t in common
            )

        t1, t2, t3 = traces(1e-4), traces(5e-5), traces(2.5e-5)
        assert maxdev(t1, t2) / maxdev(t2, t3) >= 1.8

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_determinism(self, seed):
        rng = np.random.default_rng(seed)
        delta = float(rng.uniform(0, 0.1))
        a = run_pair_sweep([delta], PARAMS)[0]
        b = run_pair_sweep([delta], PARAMS)[0]
        assert a == b

    def test_refractory_separation(self):
        dt = 1e-4
        s = TdeState()
        spike_times = []
        for step in range(4000):
            if step == 0:
                s = on_fac(s, PARAMS)
                s = on_trg(s, PARAMS)
            s, spiked = step_euler(s, PARAMS, dt, (step + 1) * 100.0)
            if spiked:
                spike_times.append((step + 1) * dt)
        assert len(spike_times) > 2
        assert min(np.diff(spike_times)) >= PARAMS.t_ref
