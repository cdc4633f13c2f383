"""Command line front end.

Every data-producing command reads one flat config file, runs a simulation,
and writes its artifacts plus a ``manifest.json`` into the output directory.
Artifacts are written atomically (temp file then rename) and contain no
timestamps, so a rerun with the same config and seed is byte-identical and
``replay`` can verify exactly that.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import AUTO, ConfigError, resolve, require_clean, defaults_text
from .detection import DetectorModel
from .hom import Wavepacket, analyze_delay_scan, hom_delay_scan, hom_points_to_csv
from .lock import DriftModel, PidGains, run_lock
from .tbs import (FitError, InterferenceQuality, fit_visibility, fringe_points_to_csv,
                  fringe_scan)
from .timing import (ChainDelays, EomDrive, TimelineConfig, gate_alignment,
                     measure_fall_time, measure_plateau_width, measure_rise_time,
                     run_timeline, sample_drive, simulate_switching,
                     waveform_to_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _write_atomic(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data)
    os.replace(tmp, path)


def _write_manifest(out_dir: Path, command: str, seed, cfg_values: dict,
                    warnings: list[str], artifacts: dict, summary: dict) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": cfg_values,
        "warnings": warnings,
        "artifacts": artifacts,
        "summary": summary,
    }
    _write_atomic(out_dir / "manifest.json",
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _drive_from(values: dict) -> EomDrive:
    return EomDrive(
        on_time_ns=values["drive.on_time_ns"],
        rise_time_10_90_ns=values["drive.rise_time_10_90_ns"],
        fall_time_10_90_ns=values["drive.fall_time_10_90_ns"],
        target_phase_rad=values["drive.target_phase_rad"],
        edge_tail_ns=values["drive.edge_tail_ns"])


def run_fringe(values: dict, seed: int, workers: int | None = None):
    phis = np.linspace(values["scan.phi_start_rad"], values["scan.phi_stop_rad"],
                       values["scan.n_points"])
    quality = InterferenceQuality(mode_overlap=values["scan.mode_overlap"])
    det = DetectorModel(efficiency=values["detector.efficiency"],
                        dark_count_rate_hz=values["detector.dark_count_rate_hz"],
                        dead_time_ns=values["detector.dead_time_ns"])
    points = fringe_scan(
        phis, quality, values["scan.shots_per_point"], seed,
        survival=values["channel.survival"], detector_model=det,
        phase_jitter_rms=values["scan.phase_jitter_rms_rad"],
        max_workers=workers)
    fit = fit_visibility(np.array([p.phi_rad for p in points]),
                         np.array([p.r_est for p in points]),
                         np.array([max(p.sigma, 1e-6) for p in points]))
    artifacts = {"fringe": "fringe.csv"}
    summary = {
        "visibility": fit.visibility,
        "visibility_sigma": fit.uncertainty,
        "phase_offset_rad": fit.phase_offset_rad,
        "n_points": len(points),
        "shots_per_point": values["scan.shots_per_point"],
    }
    return artifacts, summary, {"fringe.csv": fringe_points_to_csv(points)}


def run_hom(values: dict, seed: int):
    delays = np.linspace(values["scan.delay_start_ns"], values["scan.delay_stop_ns"],
                         values["scan.n_points"])
    packet = Wavepacket(center_wavelength_nm=values["packet.center_wavelength_nm"],
                        bandwidth_fwhm_nm=values["packet.bandwidth_fwhm_nm"])
    points = hom_delay_scan(delays, values["scan.phi_rad"], packet, packet,
                            values["scan.shots_per_point"], seed,
                            gamma_max=values["scan.max_overlap"])
    analysis = analyze_delay_scan(points)
    artifacts = {"dip": "hom.csv"}
    summary = {
        "classification": analysis.classification,
        "visibility": analysis.visibility,
        "visibility_sigma": analysis.uncertainty,
        "baseline_counts": analysis.baseline,
        "minimum_counts": analysis.minimum,
    }
    return artifacts, summary, {"hom.csv": hom_points_to_csv(points)}


def run_switch_trace(values: dict):
    drive = _drive_from(values)
    t0 = -values["trace.pre_ns"]
    t1 = drive.on_time_ns + values["trace.post_ns"]
    times, phases = sample_drive(drive, 0.0, t0, t1, values["trace.dt_ns"])
    rise = measure_rise_time(times, phases)
    fall = measure_fall_time(times, phases)
    plateau = measure_plateau_width(times, phases, drive.target_phase_rad)
    artifacts = {"trace": "switch_trace.csv"}
    summary = {
        "rise_time_10_90_ns": rise,
        "fall_time_90_10_ns": fall,
        "plateau_at_target_ns": plateau,
        "nominal_plateau_ns": drive.plateau_ns,
        "target_phase_rad": drive.target_phase_rad,
    }
    return artifacts, summary, {"switch_trace.csv": waveform_to_csv(times, phases)}


def run_feedforward(values: dict, seed: int):
    drive = _drive_from(values)
    fpga = values["delays.fpga_delay_ns"]
    delays = ChainDelays(
        fiber_length_m=values["delays.fiber_length_m"],
        fiber_group_index=values["delays.fiber_group_index"],
        detector_latency_ns=values["delays.detector_latency_ns"],
        cable_delays_ns=values["delays.cable_delays_ns"],
        fpga_delay_ns=None if fpga == AUTO else fpga)
    config = TimelineConfig(
        pulse_period_ns=values["source.pulse_period_ns"],
        p_pair=values["source.p_pair"],
        trigger_efficiency=values["source.trigger_efficiency"],
        drive=drive, delays=delays,
        enforce_rate_limit=values["limiter.enabled"],
        min_gate_spacing_ns=values["limiter.min_spacing_ns"])
    timeline = run_timeline(config, values["run.duration_ns"], seed)
    switched, counts = simulate_switching(
        timeline, drive, seed + 1,
        survival=values["channel.survival"],
        efficiency=values["detector.efficiency"])
    alignment = gate_alignment(timeline, drive)
    total = counts["d1"] + counts["d2"]
    artifacts = {"timeline": "timeline.csv"}
    summary = {
        "fpga_delay_ns": delays.resolved_fpga_delay_ns(drive),
        "n_pairs": alignment.n_photons,
        "n_heralded": alignment.n_heralded,
        "n_gated": alignment.n_gated,
        "fraction_on_plateau": alignment.fraction_on_plateau,
        "cross_pulse_fraction": alignment.cross_pulse_fraction,
        "clicks_d1": counts["d1"],
        "clicks_d2": counts["d2"],
        "lost": counts["lost"],
        "transmission_estimate": (counts["d1"] / total) if total else None,
    }
    return artifacts, summary, {"timeline.csv": switched.to_csv()}


def run_lock_sim(values: dict, seed: int):
    drift = DriftModel(
        kind=values["drift.kind"],
        rms_rad_per_sqrt_s=values["drift.rms_rad_per_sqrt_s"],
        amplitude_rad=values["drift.amplitude_rad"],
        frequency_hz=values["drift.frequency_hz"],
        step_rad=values["drift.step_rad"],
        step_time_s=values["drift.step_time_s"])
    gains = PidGains(
        kp=values["lock.kp"], ki=values["lock.ki"], kd=values["lock.kd"],
        sample_period_s=values["lock.sample_period_s"],
        output_limit_rad=values["lock.output_limit_rad"])
    result = run_lock(drift, gains, values["lock.duration_s"], seed,
                      control_enabled=values["lock.control_enabled"])
    tail = result.residual_rad[result.residual_rad.size // 2:]
    artifacts = {"trace": "lock_trace.csv"}
    summary = {
        "rms_residual_rad": result.rms_residual_rad,
        "lock_fraction": result.lock_fraction,
        "saturated_fraction": result.saturated_fraction,
        "mean_transmission": float(np.mean(np.cos(tail / 2.0) ** 2)),
    }
    return artifacts, summary, {"lock_trace.csv": result.to_csv()}


_RUNNERS = {
    "fringe-scan": lambda values, seed, workers: run_fringe(values, seed, workers),
    "hom-scan": lambda values, seed, workers: run_hom(values, seed),
    "switch-trace": lambda values, seed, workers: run_switch_trace(values),
    "feedforward-run": lambda values, seed, workers: run_feedforward(values, seed),
    "lock-sim": lambda values, seed, workers: run_lock_sim(values, seed),
}

_SEEDLESS = {"switch-trace"}


def _execute(command: str, values: dict, seed, out_dir: Path,
             warnings: list[str], workers: int | None = None) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts, summary, files = _RUNNERS[command](values, seed, workers)
    for name, text in files.items():
        _write_atomic(out_dir / name, text)
    _write_manifest(out_dir, command, seed, values, warnings, artifacts, summary)
    return summary


def _load_values(args, command: str):
    text = ""
    if args.config is not None:
        text = Path(args.config).read_text()
    cfg = resolve(text, command)
    require_clean(cfg)
    if command in _SEEDLESS:
        seed = None
    else:
        seed = args.seed if args.seed is not None else cfg.values["run.seed"]
    return cfg, seed


def _run_command(args) -> int:
    command = args.command
    if args.print_defaults:
        sys.stdout.write(defaults_text(command))
        return EXIT_OK
    if args.out is None:
        sys.stderr.write("error: --out is required\n")
        return EXIT_CONFIG
    cfg, seed = _load_values(args, command)
    warnings = [d.render() for d in cfg.warnings]
    for w in warnings:
        sys.stderr.write(w + "\n")
    workers = getattr(args, "workers", None)
    summary = _execute(command, cfg.values, seed, Path(args.out), warnings, workers)
    for key in sorted(summary):
        print(f"{key} = {summary[key]}")
    return EXIT_OK


def _run_replay(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = json.loads(manifest_path.read_text())
    command = manifest["command"]
    if command not in _RUNNERS:
        raise ConfigError(f"manifest names unknown command {command!r}")
    summary = _execute(command, manifest["config"], manifest["seed"],
                       Path(args.out), manifest.get("warnings", []))
    for key in sorted(summary):
        print(f"{key} = {summary[key]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbsim",
        description="Simulate a rapidly switchable beam splitter experiment: "
                    "single-photon fringes, two-photon dips, gate timing, "
                    "feed-forward switching and interferometer locking.")
    parser.add_argument("--version", action="version", version=f"tbsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seedable=True):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="output directory for artifacts")
        p.add_argument("--print-defaults", action="store_true",
                       help="print the default config for this command and exit")
        if seedable:
            p.add_argument("--seed", type=int, help="override run.seed")
        else:
            p.set_defaults(seed=None)

    p = sub.add_parser("fringe-scan", help="heralded single-photon fringe versus phase")
    add_common(p)
    p.add_argument("--workers", type=int, default=None,
                   help="thread pool size for scan points (results identical)")
    add_common(sub.add_parser("hom-scan", help="two-photon coincidence dip versus delay"))
    add_common(sub.add_parser("switch-trace", help="gate envelope trace and edge metrics"),
               seedable=False)
    add_common(sub.add_parser("feedforward-run", help="pulsed source, heralding chain and switching"))
    add_common(sub.add_parser("lock-sim", help="interferometer stabilization loop"))

    p = sub.add_parser("replay", help="re-run a manifest and regenerate its artifacts")
    p.add_argument("--manifest", required=True, help="path to a manifest.json")
    p.add_argument("--out", required=True, help="output directory for the replay")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return _run_replay(args)
        return _run_command(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        # rendered diagnostics already carry their severity prefix
        msg = str(exc)
        if not msg.startswith(("error:", "warning:")):
            msg = f"error: {msg}"
        sys.stderr.write(msg + "\n")
        return EXIT_CONFIG
    except (FitError, ValueError, RuntimeError) as exc:
        sys.stderr.write(f"runtime failure: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
