"""Command-line entry point for reproducible experiments.

Subcommands: ``sweep`` (pair-separation characterisation), ``estimate``
(event stream -> yaw-rate estimate + metrics), ``analog`` (closed-form
circuit checks). Every run writes a run_manifest.json with the fully
resolved configuration, so a run is reproducible from the manifest alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analog, metrics, network, readout, tde
from .events import (
    EventStream,
    PoseTrack,
    StimulusSpec,
    gen_moving_edge,
    gen_yaw_dots,
    read_events,
    read_pose_csv,
    write_pose_csv,
)

DEFAULT_SWEEP_MS = [0.0, 20.0, 40.0, 60.0, 80.0]


class CliError(Exception):
    pass


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _tde_params(cfg: dict) -> tde.TdeParams:
    return tde.TdeParams(**cfg.get("tde", {}))


def _write_manifest(out_dir: Path, command: str, resolved: dict) -> None:
    manifest = {"command": command, "config": resolved}
    with open(out_dir / "run_manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    params = _tde_params(cfg)
    delta_ts_ms = cfg.get("delta_ts_ms", DEFAULT_SWEEP_MS)
    dt = cfg.get("dt", 0.1e-3)
    if not delta_ts_ms:
        raise CliError("empty sweep")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = tde.run_pair_sweep([ms * 1e-3 for ms in delta_ts_ms], params, dt=dt)
    with open(out_dir / "sweep.csv", "w", encoding="utf-8") as f:
        f.write("delta_t_s,spike_count,first_spike_latency_s\n")
        for r in results:
            lat = "" if r.first_spike_latency is None else f"{r.first_spike_latency:.9f}"
            f.write(f"{r.delta_t:.6f},{r.spike_count},{lat}\n")
    resolved = {
        "tde": dataclasses.asdict(params),
        "delta_ts_ms": list(delta_ts_ms),
        "dt": dt,
    }
    _write_manifest(out_dir, "sweep", resolved)
    return 0


def _resolve_input(cfg: dict, seed: int) -> tuple[EventStream, PoseTrack | None, dict]:
    inp = cfg.get("input")
    if inp is None:
        raise CliError("config must define an input")
    if "path" in inp:
        stream = read_events(inp["path"], inp.get("format", "evt1"))
        return stream, None, dict(inp)
    kind = inp.get("kind")
    spec_fields = dict(
        kind=kind,
        sensor_width=inp["sensor_width"],
        sensor_height=inp["sensor_height"],
        duration_us=inp["duration_us"],
        seed=inp.get("seed", seed),
    )
    if kind == "moving_edge":
        spec = StimulusSpec(velocity_px_per_s=inp["velocity_px_per_s"], **spec_fields)
        return gen_moving_edge(spec), None, {**spec_fields, "velocity_px_per_s": inp["velocity_px_per_s"]}
    if kind == "yaw_dots":
        rate = inp.get("yaw_rate", {})
        amp = rate.get("amplitude_rad_s", 0.3)
        period = rate.get("period_s", 4.0)
        omega = 2.0 * math.pi / period
        spec = StimulusSpec(
            yaw_rate_fn=lambda t: amp * math.sin(omega * t),
            dot_density=inp.get("dot_density", 0.02),
            px_per_rad=inp.get("px_per_rad", 400.0),
            **spec_fields,
        )
        stream, track = gen_yaw_dots(spec)
        resolved = {
            **spec_fields,
            "yaw_rate": {"amplitude_rad_s": amp, "period_s": period},
            "dot_density": spec.dot_density,
            "px_per_rad": spec.px_per_rad,
        }
        return stream, track, resolved
    raise CliError(f"unknown input kind {kind!r}")


def _build_network(cfg: dict, stream: EventStream, params: tde.TdeParams, seed: int, dt: float):
    net = cfg.get("network", {"type": "dense"})
    stride = net.get("stride", 2)
    if net.get("type") == "two_box":
        return network.build_two_box(
            net.get("seed", seed),
            stream.sensor_width,
            stream.sensor_height,
            stride=stride,
            params=params,
            dt=dt,
        ), {"type": "two_box", "stride": stride, "seed": net.get("seed", seed)}
    if net.get("type", "dense") == "dense":
        return network.build_dense(
            stream.sensor_width, stream.sensor_height, stride=stride, params=params, dt=dt
        ), {"type": "dense", "stride": stride}
    raise CliError(f"unknown network type {net.get('type')!r}")


def cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    params = _tde_params(cfg)
    dt = cfg.get("dt", 0.1e-3)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    stream, synthetic_gt, input_resolved = _resolve_input(cfg, seed)
    config, net_resolved = _build_network(cfg, stream, params, seed, dt)

    ro = cfg.get("readout", {})
    tau_a = ro.get("tau_a", 10e-3)
    sign = ro.get("sign", 1)
    norm_mode = ro.get("normalization", "offline")
    duration_us = int(stream.t[-1]) + 200_000 if len(stream) else 200_000

    spikes = network.run(stream, config, duration_us=duration_us, workers=args.workers)
    raw = readout.integrate_diff(
        spikes, config.orientation_map(), tau_a, dt, duration_us
    )
    if sign == -1:
        raw = readout.ActivityTrace(raw.dt, raw.t0_us, -raw.samples)
    if norm_mode == "causal":
        norm = readout.normalize_causal(raw)
    else:
        norm = readout.normalize(raw)

    with open(out_dir / "spikes.csv", "wb") as f:
        f.write(b"t_us,unit_id\n")
        np.savetxt(f, np.column_stack([spikes.t_us, spikes.unit_id]), fmt="%d", delimiter=",")
    ts = raw.times_us()
    with open(out_dir / "activity.csv", "wb") as f:
        f.write(b"t_us,a_raw,a_norm\n")
        np.savetxt(
            f,
            np.column_stack([ts.astype(np.float64), raw.samples, norm.samples]),
            fmt=("%d", "%.12g", "%.12g"),
            delimiter=",",
        )

    # Ground truth: synthetic track, an external pose CSV, or absent.
    gt = synthetic_gt
    mcfg = cfg.get("metrics", {})
    if "pose" in mcfg:
        gt = read_pose_csv(mcfg["pose"])

    report = {"degenerate": norm.degenerate}
    scale = mcfg.get("fixed_scale", 1.0)
    if gt is not None and not norm.degenerate:
        step_us = int(mcfg.get("step_ms", 10) * 1000)
        lo = max(int(ts[0]), int(gt.t_us[0]))
        hi = min(int(ts[-1]), int(gt.t_us[-1]))
        grid = np.arange(lo, hi + 1, step_us, dtype=np.int64)
        pred = metrics.resample_linear(norm, grid)
        rate = metrics.resample_linear(gt, grid, field="yaw_rate")
        scale, s_sign = metrics.calibrate_scale(pred, rate)
        pred_track = PoseTrack(
            grid, np.concatenate([[0.0], np.cumsum(0.5 * (pred[1:] + pred[:-1]) * scale * np.diff(grid) * 1e-6)]), scale * pred
        )
        gt_track = PoseTrack(
            grid, np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(grid) * 1e-6)]), rate
        )
        opts = metrics.ArreOptions(norm=mcfg.get("arre_norm", "angle"))
        pr = metrics.relative_rotations(pred_track)
        gr = metrics.relative_rotations(gt_track)
        drift = metrics.drift_report(pred_track, gt_track)
        report.update(
            {
                "arre_angle": metrics.arre(pr, gr, metrics.ArreOptions("angle")),
                "arre_frobenius": metrics.arre(pr, gr, metrics.ArreOptions("frobenius")),
                "arre": metrics.arre(pr, gr, opts),
                "scale": scale,
                "sign": s_sign,
                "pearson_r": metrics.pearson(pred, rate),
                "final_heading_error": drift["final_error"],
                "max_heading_error": drift["max_error"],
            }
        )
        with open(out_dir / "metrics.json", "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")

    heading = readout.integrate_heading(norm, scale if gt is not None else 1.0)
    write_pose_csv(heading, out_dir / "heading.csv")

    resolved = {
        "input": input_resolved,
        "network": net_resolved,
        "tde": dataclasses.asdict(params),
        "dt": dt,
        "readout": {"tau_a": tau_a, "sign": sign, "normalization": norm_mode},
        "metrics": mcfg,
        "seed": seed,
        "workers": args.workers,
    }
    _write_manifest(out_dir, "estimate", resolved)
    return 0


def cmd_analog(args) -> int:
    cfg = _load_config(args.config)
    biases = analog.DpiBiases(**cfg.get("biases", {}))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    tau_f = biases.tau_fac
    delays = cfg.get("delays_s") or list(np.linspace(0.2 * tau_f, 2.0 * tau_f, 10))
    sweep = analog.peak_current_vs_delay(delays, biases)
    with open(out_dir / "analog_sweep.csv", "w", encoding="utf-8") as f:
        f.write("delay_s,peak_a\n")
        for d, p in sweep:
            f.write(f"{d:.9g},{p:.9g}\n")

    slope, r2 = analog.log_peak_slope(sweep)
    slope_err = abs(slope + 1.0 / tau_f) * tau_f
    ode_err = _closed_form_vs_ode_error(biases)
    summary = {
        "tau_fac_s": tau_f,
        "fitted_slope_per_s": slope,
        "expected_slope_per_s": -1.0 / tau_f,
        "slope_rel_error": slope_err,
        "r_squared": r2,
        "max_ode_rel_error": ode_err,
        "pass": bool(slope_err < 0.02 and r2 > 0.999 and ode_err < 0.01),
    }
    with open(out_dir / "analog_summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(out_dir, "analog", {"biases": dataclasses.asdict(biases), "delays_s": list(delays)})
    return 0 if summary["pass"] else 1


def _closed_form_vs_ode_error(biases: analog.DpiBiases) -> float:
    """Max relative error of the closed-form trigger current vs the linear ODE."""
    from scipy.integrate import solve_ivp

    tau_f, tau_t = biases.tau_fac, biases.tau_trg
    fac = analog.PulseWindow(0.0, tau_f)
    t0 = fac.t_plus + 0.5 * tau_f
    t1 = t0 + 2.0 * tau_t

    def forcing(t):
        return (biases.i_w_trg / biases.i_tau_trg) * analog.trg_gain_response(t, fac, biases)

    sol = solve_ivp(
        lambda t, y: [(forcing(t) - y[0]) / tau_t],
        (t0, t1),
        [0.0],
        rtol=1e-10,
        atol=1e-30,
        dense_output=True,
        max_step=tau_t / 50,
    )
    ts = np.linspace(t0 + 1e-4 * tau_t, t1, 200)
    closed = np.array(
        [analog.tde_current_response(t, fac, (t0, t1), biases) for t in ts]
    )
    numeric = sol.sol(ts)[0]
    scale = np.max(np.abs(numeric))
    return float(np.max(np.abs(closed - numeric)) / scale)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tde-ego", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("sweep", cmd_sweep), ("estimate", cmd_estimate), ("analog", cmd_analog)):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
