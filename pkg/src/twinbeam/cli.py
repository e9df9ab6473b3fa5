"""Command-line entry point.

Subcommands mirror the measurements: ``spectrum`` (one normalized noise
trace), ``power-scan`` (slope method), ``sweep`` (parameter
dependence), ``beat`` (pump-probe beat line) and ``calibrate`` (refit
the cell model against anchor targets). Each run writes CSV files plus
matching figures into the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import write_power_scan_csv
from .config import (
    CONFIG_DIR_ENV,
    ConfigError,
    ExperimentConfig,
    load_config,
)
from .medium import DEFAULT_CALIBRATION_START, MediumCalibration, SWEEP_AXES
from .pipeline import (
    CalibrationTargets,
    fit_calibration,
    run_beat,
    run_power_scan,
    run_spectrum,
    run_sweep,
)
from . import plotting

__all__ = ["main"]

_SWEEP_CSV_COLUMNS = {
    "pump": "pump_power_w",
    "delta1": "delta_one_hz",
    "delta2": "delta_two_hz",
    "temperature": "temperature_c",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinbeam",
        description=(
            "Simulate intensity-difference squeezing of four-wave-mixing "
            "twin beams in hot Cs vapor."
        ),
        epilog=(
            f"Named configs resolve against ${CONFIG_DIR_ENV} "
            "(default: the packaged config directory)."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="experiment config file (name or path)")
            p.add_argument("--seed", type=int, default=None,
                           help="override the master RNG seed")
        p.add_argument("--out-dir", default=None, help="output directory")

    p = sub.add_parser("spectrum", help="normalized intensity-difference spectrum")
    add_common(p)

    p = sub.add_parser("power-scan", help="noise vs optical power (slope method)")
    add_common(p)

    p = sub.add_parser("sweep", help="gain and squeezing along one parameter axis")
    add_common(p)
    p.add_argument("--axis", default=None, choices=sorted(SWEEP_AXES),
                   help="swept parameter")
    p.add_argument("--grid", default=None, help="grid as start:stop:count")

    p = sub.add_parser("beat", help="pump-probe beat spectrum check")
    add_common(p)

    p = sub.add_parser("calibrate", help="fit the cell model to anchor targets")
    p.add_argument("--targets", required=True, help="anchor targets file")
    p.add_argument("--start", default=None,
                   help="starting calibration file (default: built-in)")
    p.add_argument("--out-dir", default=None, help="output directory")
    return parser


def _out_dir(args, config: ExperimentConfig | None = None) -> Path:
    if args.out_dir:
        out = Path(args.out_dir)
    elif config is not None and config.out_dir is not None:
        out = config.out_dir
    else:
        out = Path("twinbeam-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ExperimentConfig:
    return load_config(
        args.config,
        seed_override=args.seed,
        axis_override=getattr(args, "axis", None),
        grid_override=getattr(args, "grid", None),
    )


def _cmd_spectrum(args) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    run = run_spectrum(config)
    run.normalized.to_csv(out / "spectrum.csv")
    run.snl.to_csv(out / "snl.csv")
    plotting.plot_spectrum(
        run.normalized, out / "spectrum.png",
        title=f"source: {config.source_name}",
    )
    if run.bandwidth_exceeds_span:
        bw_text = f">= {run.bandwidth_hz / 1e6:.3f} MHz (exceeds measured span)"
    else:
        bw_text = f"{run.bandwidth_hz / 1e6:.3f} MHz"
    lines = [
        f"source preset: {config.source_name}",
        f"gain: {run.gain:.4f}",
        f"detected twin-beam power: {run.detected_power_w * 1e3:.4f} mW",
        f"max squeezing: {run.min_db:.2f} dB at {run.min_freq_hz / 1e6:.3f} MHz",
        f"squeezing bandwidth: {bw_text}",
        "files: spectrum.csv snl.csv spectrum.png",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def _cmd_power_scan(args) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    run = run_power_scan(config)
    write_power_scan_csv(out / "scan.csv", run.twin_points)
    write_power_scan_csv(out / "scan_snl.csv", run.snl_points)
    plotting.plot_power_scan(
        run.twin_points, run.snl_points, run.twin_fit, run.snl_fit,
        out / "power_scan.png",
        title=f"source: {config.source_name} at "
              f"{run.analysis_freq_hz / 1e6:.2f} MHz",
    )
    lines = [
        f"source preset: {config.source_name}",
        f"analysis frequency: {run.analysis_freq_hz / 1e6:.3f} MHz",
        f"twin slope: {run.twin_fit.slope:.6e} +/- {run.twin_fit.slope_stderr:.2e}",
        f"snl slope:  {run.snl_fit.slope:.6e} +/- {run.snl_fit.slope_stderr:.2e}",
        f"slope ratio: {run.slope_ratio:.4f}",
        f"squeezing: {run.squeezing_db:.2f} dB",
        "files: scan.csv scan_snl.csv power_scan.png",
    ]
    (out / "fit_summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def _cmd_sweep(args) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    result = run_sweep(config)
    column = _SWEEP_CSV_COLUMNS[result.axis]
    with open(out / "sweep.csv", "w", newline="") as fh:
        fh.write(f"{column},gain,squeezing_db\n")
        for v, g, s in zip(result.values, result.gains, result.squeezing_db):
            fh.write(f"{float(v)!r},{float(g)!r},{float(s)!r}\n")
    plotting.plot_sweep(result, out / "sweep.png", title=f"axis: {result.axis}")
    best = int(result.squeezing_db.argmin())
    lines = [
        f"axis: {result.axis} ({column})",
        f"points: {result.values.size}",
        f"best squeezing: {result.squeezing_db[best]:.2f} dB "
        f"at {column} = {result.values[best]:g}",
        f"gain range: {result.gains.min():.3f} .. {result.gains.max():.3f}",
        "files: sweep.csv sweep.png",
    ]
    (out / "sweep_summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def _cmd_beat(args) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    spectrum, fwhm = run_beat(config)
    spectrum.to_csv(out / "beat.csv")
    plotting.plot_beat(spectrum, fwhm, out / "beat.png",
                       title=f"source: {config.source_name}")
    lines = [
        f"source preset: {config.source_name}",
        f"configured beat linewidth: {config.source.beat_fwhm:g} Hz",
        f"analyzer rbw: {config.beat_rbw:g} Hz",
        f"fitted beat FWHM: {fwhm:g} Hz",
        "files: beat.csv beat.png",
    ]
    (out / "beat_summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def _cmd_calibrate(args) -> int:
    out = _out_dir(args)
    targets = CalibrationTargets.from_file(args.targets)
    if args.start:
        start = MediumCalibration.from_file(args.start)
    else:
        start = DEFAULT_CALIBRATION_START
    cal = fit_calibration(targets, start)
    out_path = out / "calibration.cfg"
    cal.to_file(out_path)
    lines = [
        f"targets: {args.targets}",
        f"g0 = {cal.g0!r}",
        f"xs_delta_amp = {cal.xs_delta_amp!r}",
        f"xs_t_amp = {cal.xs_t_amp!r}",
        f"written: {out_path}",
    ]
    print("\n".join(lines))
    return 0


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "power-scan": _cmd_power_scan,
    "sweep": _cmd_sweep,
    "beat": _cmd_beat,
    "calibrate": _cmd_calibrate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
