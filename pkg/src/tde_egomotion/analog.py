"""Closed-form model of the subthreshold CMOS TDE synapse.

Two cascaded first-order current integrators: a facilitator stage whose
output current rises toward an asymptote during a digital input pulse and
relaxes back afterwards, and a trigger stage driven by that current during
a later trigger pulse. The peak trigger-stage current decays exponentially
in the facilitator-to-trigger delay, with the facilitator time constant.

Thermal voltage, subthreshold slope, and capacitances are standard
room-temperature defaults; absolute current magnitudes therefore depend
on these assumed values, while ratios and time constants do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class DpiBiases:
    i_w_fac: float = 4e-9  # A
    i_gain_fac: float = 10e-12  # A
    i_tau_fac: float = 2e-12  # A
    i_w_trg: float = 4e-9  # A
    i_tau_trg: float = 2e-12  # A
    c_fac: float = 100e-15  # F, assumed (not published)
    c_trg: float = 100e-15  # F, assumed (not published)
    u_t: float = 25.85e-3  # V, thermal voltage at room temperature
    kappa: float = 0.7  # subthreshold slope factor

    def __post_init__(self) -> None:
        for name in ("i_w_fac", "i_gain_fac", "i_tau_fac", "i_w_trg", "i_tau_trg", "c_fac", "c_trg", "u_t"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.kappa <= 1.0):
            raise ValueError("kappa must be in (0, 1]")

    @property
    def tau_fac(self) -> float:
        return self.u_t * self.c_fac / (self.kappa * self.i_tau_fac)

    @property
    def tau_trg(self) -> float:
        return self.u_t * self.c_trg / (self.kappa * self.i_tau_trg)

    @property
    def fac_asymptote(self) -> float:
        """Facilitator-stage current plateau under a long input pulse."""
        return self.i_w_fac * self.i_gain_fac / self.i_tau_fac


@dataclass(frozen=True)
class PulseWindow:
    t_minus: float  # s, pulse start
    t_plus: float  # s, pulse end

    def __post_init__(self) -> None:
        if not (self.t_plus > self.t_minus >= 0):
            raise ValueError("require t_plus > t_minus >= 0")


def trg_gain_response(
    t: float, window: PulseWindow, biases: DpiBiases, initial: float = 0.0
) -> float:
    """Facilitator-stage output current at time ``t``.

    During the pulse the current charges toward the bias-set asymptote
    (discharge phase of the facilitator capacitor); after the pulse it
    relaxes back to ``initial`` (charge phase), both with tau_fac.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    tau = biases.tau_fac
    if t < window.t_minus:
        return initial
    if t < window.t_plus:
        e = math.exp(-(t - window.t_minus) / tau)
        return biases.fac_asymptote * (1.0 - e) + initial * e
    # In-pulse branch evaluated at t_plus, so the phases join continuously.
    e = math.exp(-(window.t_plus - window.t_minus) / tau)
    i_plus = biases.fac_asymptote * (1.0 - e) + initial * e
    return initial + (i_plus - initial) * math.exp(-(t - window.t_plus) / tau)


def _two_exp_kernel(x: float, tau_f: float, tau_t: float) -> float:
    """tau_f/(tau_f - tau_t) * (e^(-x/tau_f) - e^(-x/tau_t)), stable at tau_f = tau_t."""
    if abs(tau_f - tau_t) < 1e-6 * tau_f:
        return (x / tau_f) * math.exp(-x / tau_f)
    return tau_f / (tau_f - tau_t) * (math.exp(-x / tau_f) - math.exp(-x / tau_t))


def tde_current_response(
    t: float,
    fac_window: PulseWindow,
    trg_times: tuple[float, float],
    biases: DpiBiases,
    i_gain_initial: float = 0.0,
    i_tde_initial: float = 0.0,
) -> float:
    """Trigger-stage output current for a trigger pulse after the FAC pulse.

    The driving term is the facilitator-stage relaxation; the supported
    regime is a trigger pulse arriving entirely after the facilitator
    pulse has ended.
    """
    t_minus_tde, t_plus_tde = trg_times
    if t_minus_tde < fac_window.t_plus:
        raise ValueError("unsupported regime: trigger pulse inside the facilitator pulse")
    if t_plus_tde <= t_minus_tde:
        raise ValueError("trigger pulse must have positive width")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t < t_minus_tde:
        return i_tde_initial

    tau_f, tau_t = biases.tau_fac, biases.tau_trg
    gain_w = biases.i_w_trg / biases.i_tau_trg
    # Facilitator-stage relaxation: value at FAC pulse end, then decay.
    i_g_minus = i_gain_initial
    i_g_plus = trg_gain_response(fac_window.t_plus, fac_window, biases, i_gain_initial)
    a = gain_w * i_g_minus
    b = gain_w * (i_g_plus - i_g_minus)
    delay = t_minus_tde - fac_window.t_plus

    def discharge(x: float) -> float:
        # x: time since the trigger pulse start
        et = math.exp(-x / tau_t)
        return (
            a * (1.0 - et)
            + i_tde_initial * et
            + b * math.exp(-delay / tau_f) * _two_exp_kernel(x, tau_f, tau_t)
        )

    if t < t_plus_tde:
        return discharge(t - t_minus_tde)
    i_peak = discharge(t_plus_tde - t_minus_tde)
    return i_peak * math.exp(-(t - t_plus_tde) / tau_t)


def peak_current_vs_delay(
    delays: Sequence[float],
    biases: DpiBiases,
    pulse_width: float = 1e-6,
    fac_pulse_width: float = 1e-3,
) -> list[tuple[float, float]]:
    """Peak trigger-stage current vs facilitator-to-trigger delay.

    The facilitator pulse spans [0, fac_pulse_width]; each trigger pulse
    of width ``pulse_width`` starts ``delay`` after the facilitator pulse
    ends. The peak is the value at the trigger pulse end.
    """
    if pulse_width <= 0 or fac_pulse_width <= 0:
        raise ValueError("pulse widths must be positive")
    fac = PulseWindow(0.0, fac_pulse_width)
    out = []
    for d in delays:
        if d < 0:
            raise ValueError("delays must be nonnegative")
        t0 = fac_pulse_width + d
        peak = tde_current_response(t0 + pulse_width, fac, (t0, t0 + pulse_width), biases)
        out.append((float(d), float(peak)))
    return out


def log_peak_slope(sweep: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Linear regression of ln(peak) on delay: returns (slope, r_squared)."""
    import numpy as np

    d = np.array([p[0] for p in sweep])
    y = np.log(np.array([p[1] for p in sweep]))
    slope, intercept = np.polyfit(d, y, 1)
    fit = slope * d + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2
