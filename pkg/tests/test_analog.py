import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from tde_egomotion.analog import (
    DpiBiases,
    PulseWindow,
    log_peak_slope,
    peak_current_vs_delay,
    tde_current_response,
    trg_gain_response,
)

BIASES = DpiBiases()


class TestBiases:
    def test_default_time_constant(self):
        # U_T C / (kappa I_tau) with the default biases
        expected = 25.85e-3 * 100e-15 / (0.7 * 2e-12)
        assert BIASES.tau_fac == pytest.approx(expected)
        assert BIASES.tau_trg == pytest.approx(expected)

    def test_asymptote(self):
        assert BIASES.fac_asymptote == pytest.approx(4e-9 * 10e-12 / 2e-12)

    def test_positive_bias_required(self):
        with pytest.raises(ValueError, match="i_tau_fac"):
            DpiBiases(i_tau_fac=0.0)

    def test_kappa_range(self):
        with pytest.raises(ValueError, match="kappa"):
            DpiBiases(kappa=1.5)


class TestPulseWindow:
    def test_valid(self):
        PulseWindow(0.0, 1e-3)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            PulseWindow(1e-3, 1e-3)


class TestFacStage:
    def test_before_pulse(self):
        w = PulseWindow(1e-3, 2e-3)
        assert trg_gain_response(0.5e-3, w, BIASES, initial=3e-12) == 3e-12

    def test_rises_toward_asymptote(self):
        w = PulseWindow(0.0, 1.0)
        late = trg_gain_response(0.5, w, BIASES)
        assert late == pytest.approx(BIASES.fac_asymptote, rel=1e-9)

    def test_one_tau_charge_fraction(self):
        w = PulseWindow(0.0, 1.0)
        v = trg_gain_response(BIASES.tau_fac, w, BIASES)
        assert v == pytest.approx(BIASES.fac_asymptote * (1 - math.exp(-1)), rel=1e-12)

    def test_continuous_at_pulse_end(self):
        w = PulseWindow(0.0, 1e-3)
        eps = 1e-12
        assert trg_gain_response(w.t_plus - eps, w, BIASES) == pytest.approx(
            trg_gain_response(w.t_plus + eps, w, BIASES), rel=1e-6
        )

    def test_relaxes_back_to_initial(self):
        w = PulseWindow(0.0, 1e-3)
        v = trg_gain_response(1.0, w, BIASES, initial=2e-12)
        assert v == pytest.approx(2e-12, rel=1e-9)

    def test_matches_linear_ode(self):
        # dI/dt = (asym * pulse(t) - I) / tau
        w = PulseWindow(0.0, 2e-3)
        tau = BIASES.tau_fac

        def rhs(t, y):
            drive = BIASES.fac_asymptote if w.t_minus <= t < w.t_plus else 0.0
            return [(drive - y[0]) / tau]

        ts = np.linspace(0, 6e-3, 40)
        sol = solve_ivp(rhs, (0, 6e-3), [0.0], t_eval=ts, rtol=1e-10, atol=1e-22, max_step=1e-5)
        closed = np.array([trg_gain_response(t, w, BIASES) for t in ts])
        err = np.max(np.abs(sol.y[0] - closed)) / np.max(closed)
        assert err < 1e-6


class TestTdeStage:
    def test_trigger_inside_fac_pulse_rejected(self):
        fac = PulseWindow(0.0, 1e-3)
        with pytest.raises(ValueError, match="regime"):
            tde_current_response(1e-3, fac, (0.5e-3, 0.6e-3), BIASES)

    def test_quiet_before_trigger(self):
        fac = PulseWindow(0.0, 1e-3)
        v = tde_current_response(1.5e-3, fac, (2e-3, 2.1e-3), BIASES, i_tde_initial=1e-12)
        assert v == 1e-12

    def test_peak_scales_exponentially_with_delay(self):
        tau = BIASES.tau_fac
        sweep = peak_current_vs_delay([0.5 * tau, 1.5 * tau], BIASES)
        ratio = sweep[1][1] / sweep[0][1]
        assert ratio == pytest.approx(math.exp(-1.0), rel=1e-9)

    def test_log_slope_matches_fac_time_constant(self):
        tau = BIASES.tau_fac
        delays = np.linspace(0.2 * tau, 2.0 * tau, 10)
        slope, r2 = log_peak_slope(peak_current_vs_delay(delays, BIASES))
        assert slope == pytest.approx(-1.0 / tau, rel=1e-9)
        assert r2 > 0.999

    def test_matches_linear_ode(self):
        # Full two-stage linear ODE: fac stage drives the trigger stage
        # only while the trigger pulse is high.
        fac = PulseWindow(0.0, BIASES.tau_fac)
        tau_f, tau_t = BIASES.tau_fac, BIASES.tau_trg
        t0 = fac.t_plus + 0.5 * tau_f
        trg = (t0, t0 + 2 * tau_t)
        gain_w = BIASES.i_w_trg / BIASES.i_tau_trg

        def rhs(t, y):
            i_g, i_tde = y
            drive_f = BIASES.fac_asymptote if fac.t_minus <= t < fac.t_plus else 0.0
            di_g = (drive_f - i_g) / tau_f
            drive_t = gain_w * i_g if trg[0] <= t < trg[1] else 0.0
            di_tde = (drive_t - i_tde) / tau_t if trg[0] <= t < trg[1] else -i_tde / tau_t
            return [di_g, di_tde]

        t_end = trg[1] + tau_t
        ts = np.linspace(trg[0], t_end, 30)
        sol = solve_ivp(
            rhs, (0, t_end), [0.0, 0.0], t_eval=ts, rtol=1e-9, atol=1e-16, max_step=2e-5
        )
        assert sol.success
        closed = np.array([tde_current_response(t, fac, trg, BIASES) for t in ts])
        err = np.max(np.abs(sol.y[1] - closed)) / np.max(np.abs(closed))
        assert err < 0.01

    def test_negative_delay_rejected(self):
        with pytest.raises(ValueError, match="delays"):
            peak_current_vs_delay([-1e-3], BIASES)

    def test_zero_pulse_width_rejected(self):
        with pytest.raises(ValueError, match="width"):
            peak_current_vs_delay([1e-3], BIASES, pulse_width=0.0)
