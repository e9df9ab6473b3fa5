"""Experiment configuration: file format, validation, seed derivation.

One INI-style file describes a run; every subcommand reads the same
format and uses the sections it needs. Unknown keys are rejected so
typos fail loudly, and errors carry the file line of the offending key.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import constants
from .detection import DetectorModel
from .medium import LossBudget, MediumCalibration, MediumParams
from .probe_source import ProbeSource, source_preset

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "derive_seed",
    "default_config_dir",
    "packaged_calibration_path",
]

CONFIG_DIR_ENV = "TWINBEAM_CONFIG_DIR"

_DEFAULT_ANALYSIS_FREQ = {"independent": 0.23e6, "pll": 0.23e6, "eom": 1.0e6}
_DEFAULT_BEAT_SPAN = {"independent": 6e7, "pll": 40.0, "eom": 40.0}
_DEFAULT_BEAT_RBW = {"independent": 1e4, "pll": 0.1, "eom": 0.1}
_DEFAULT_SEED_POWERS = (5e-5, 1e-4, 1.5e-4, 2e-4, 2.5e-4, 3e-4)

_KNOWN_KEYS = {
    "run": {"seed", "out_dir"},
    "medium": {
        "pump_power_w",
        "delta_one_hz",
        "delta_two_hz",
        "temperature_c",
        "cell_length_m",
        "crossing_angle_rad",
        "pump_waist_m",
        "probe_waist_m",
        "calibration",
    },
    "source": {"preset", "beat_fwhm_hz", "excess_noise_db"},
    "probe": {"seed_power_w"},
    "losses": {"window_transmission", "polarizer_transmission", "detector_qe"},
    "detector": {"transimpedance_v_per_a", "electronic_floor_db_below_snl"},
    "spectrum_analyzer": {
        "rbw_hz",
        "vbw_hz",
        "f_min_hz",
        "f_max_hz",
        "sample_rate_hz",
        "duration_s",
    },
    "power_scan": {"seed_powers_w", "analysis_freq_hz", "point_duration_s"},
    "sweep": {"axis", "grid"},
    "beat": {"span_hz", "rbw_hz"},
}


class ConfigError(ValueError):
    """Invalid configuration; message carries file:line context."""


def default_config_dir() -> Path:
    """Directory searched for named configs; overridable by environment."""
    env = os.environ.get(CONFIG_DIR_ENV)
    if env:
        return Path(env)
    return Path(resources.files("twinbeam").joinpath("data", "configs"))


def packaged_calibration_path() -> Path:
    return Path(resources.files("twinbeam").joinpath("data", "default_calibration.cfg"))


def derive_seed(master_seed: int, label: str) -> int:
    """Stable per-stage seed from a master seed and a stage label.

    Labeled hashing keeps every stage's stream fixed when new stages
    are added to a run.
    """
    digest = hashlib.blake2b(
        f"{master_seed}:{label}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") & (2**63 - 1)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated description of one simulation run."""

    seed: int
    medium_params: MediumParams
    calibration: MediumCalibration
    source: ProbeSource
    source_name: str
    budget: LossBudget
    detector: DetectorModel
    seed_power: float
    rbw: float
    vbw: float
    f_min: float
    f_max: float
    sample_rate: float
    duration: float
    analysis_freq: float
    scan_seed_powers: tuple[float, ...]
    scan_point_duration: float
    sweep_axis: str | None
    sweep_grid: tuple[float, float, int] | None
    beat_span: float
    beat_rbw: float
    out_dir: Path | None = None
    path: Path | None = field(default=None, compare=False)

    def stage_seed(self, label: str) -> int:
        return derive_seed(self.seed, label)


def _line_of(text: str, section: str, key: str | None) -> int:
    """Best-effort line number of a key (or section header) in the raw text."""
    in_section = False
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            if in_section and key is not None:
                break
            in_section = stripped[1:-1].strip() == section
            if in_section and key is None:
                return i
            continue
        if in_section and key is not None:
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return i
    return 0


class _Reader:
    """configparser wrapper that raises ConfigError with line context."""

    def __init__(self, cp: configparser.ConfigParser, text: str, path):
        self.cp = cp
        self.text = text
        self.path = path

    def err(self, section: str, key: str | None, message: str) -> ConfigError:
        line = _line_of(self.text, section, key)
        where = f"{self.path}:{line}" if line else f"{self.path}"
        target = f"{section}.{key}" if key else f"[{section}]"
        return ConfigError(f"{where}: {target}: {message}")

    def get_float(self, section: str, key: str, default: float) -> float:
        if not self.cp.has_option(section, key):
            return default
        raw = self.cp.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise self.err(section, key, f"not a number: {raw!r}") from None

    def get_int(self, section: str, key: str, default: int | None) -> int | None:
        if not self.cp.has_option(section, key):
            return default
        raw = self.cp.get(section, key)
        try:
            return int(raw)
        except ValueError:
            raise self.err(section, key, f"not an integer: {raw!r}") from None

    def get_str(self, section: str, key: str, default: str | None) -> str | None:
        if not self.cp.has_option(section, key):
            return default
        return self.cp.get(section, key).strip()

    def get_floats(self, section: str, key: str, default):
        if not self.cp.has_option(section, key):
            return default
        raw = self.cp.get(section, key)
        try:
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        except ValueError:
            raise self.err(section, key, f"not a list of numbers: {raw!r}") from None


def _parse_grid(spec: str) -> tuple[float, float, int]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("grid must be start:stop:count")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 2:
        raise ValueError("grid needs at least 2 points")
    if not stop > start:
        raise ValueError("grid stop must exceed start")
    return start, stop, count


def load_config(
    path,
    seed_override: int | None = None,
    out_dir_override=None,
    axis_override: str | None = None,
    grid_override: str | None = None,
) -> ExperimentConfig:
    """Read, validate and freeze a config file.

    All validation happens here, before any simulation starts.
    """
    path = Path(path)
    if not path.exists():
        candidate = default_config_dir() / path.name
        if candidate.exists():
            path = candidate
        else:
            raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    r = _Reader(cp, text, path)

    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise r.err(section, None, "unknown section")
        for key in cp.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise r.err(section, key, "unknown key")

    seed = seed_override if seed_override is not None else r.get_int("run", "seed", None)
    if seed is None:
        raise r.err("run", "seed", "a seed is required for reproducible runs")

    cal_ref = r.get_str("medium", "calibration", "default")
    if cal_ref == "default":
        cal_path = packaged_calibration_path()
    else:
        cal_path = Path(cal_ref)
        if not cal_path.is_absolute():
            cal_path = path.parent / cal_path
    try:
        calibration = MediumCalibration.from_file(cal_path)
    except (OSError, ValueError) as exc:
        raise r.err("medium", "calibration", str(exc)) from None

    try:
        medium_params = MediumParams(
            pump_power=r.get_float("medium", "pump_power_w", constants.PUMP_POWER_W),
            delta_one=r.get_float("medium", "delta_one_hz", constants.DELTA_ONE_HZ),
            delta_two=r.get_float("medium", "delta_two_hz", constants.DELTA_TWO_HZ),
            temperature=r.get_float("medium", "temperature_c", constants.CELL_TEMPERATURE_C),
            cell_length=r.get_float("medium", "cell_length_m", constants.CELL_LENGTH_M),
            crossing_angle=r.get_float(
                "medium", "crossing_angle_rad", constants.CROSSING_ANGLE_RAD
            ),
            pump_waist=r.get_float("medium", "pump_waist_m", constants.PUMP_WAIST_M),
            probe_waist=r.get_float("medium", "probe_waist_m", constants.PROBE_WAIST_M),
        )
    except ValueError as exc:
        raise r.err("medium", None, str(exc)) from None

    source_name = r.get_str("source", "preset", "eom")
    overrides = {}
    fwhm = r.get_float("source", "beat_fwhm_hz", float("nan"))
    if fwhm == fwhm:
        overrides["beat_fwhm"] = fwhm
    excess_db = r.get_float("source", "excess_noise_db", float("nan"))
    if excess_db == excess_db:
        overrides["excess_noise_db"] = excess_db
    try:
        source = source_preset(source_name, **overrides)
    except (TypeError, ValueError) as exc:
        raise r.err("source", "preset", str(exc)) from None

    try:
        budget = LossBudget(
            polarizer_transmission=r.get_float(
                "losses", "polarizer_transmission", constants.POLARIZER_TRANSMISSION
            ),
            detector_qe=r.get_float("losses", "detector_qe", constants.DETECTOR_QE),
            window_transmission=r.get_float(
                "losses", "window_transmission", constants.WINDOW_TRANSMISSION
            ),
        )
    except ValueError as exc:
        raise r.err("losses", None, str(exc)) from None

    seed_power = r.get_float("probe", "seed_power_w", constants.SEED_POWER_W)
    if not seed_power > 0:
        raise r.err("probe", "seed_power_w", "must be > 0")

    # Floor anchored at the detected power of the configured operating
    # point, i.e. the trace's own SNL is the floor reference.
    from .medium import composed_noise

    try:
        _, ref_model, _ = composed_noise(medium_params, calibration, budget, seed_power)
    except ValueError as exc:
        raise r.err("medium", None, str(exc)) from None
    try:
        detector = DetectorModel(
            quantum_efficiency=budget.detector_qe,
            transimpedance=r.get_float(
                "detector", "transimpedance_v_per_a", constants.TRANSIMPEDANCE_V_PER_A
            ),
            electronic_floor_db_below_snl=r.get_float(
                "detector",
                "electronic_floor_db_below_snl",
                constants.ELECTRONIC_FLOOR_DB_BELOW_SNL,
            ),
            floor_reference_power_w=ref_model.detected_total,
        )
    except ValueError as exc:
        raise r.err("detector", None, str(exc)) from None

    rbw = r.get_float("spectrum_analyzer", "rbw_hz", constants.RBW_HZ)
    vbw = r.get_float("spectrum_analyzer", "vbw_hz", constants.VBW_HZ)
    f_min = r.get_float("spectrum_analyzer", "f_min_hz", 5e4)
    f_max = r.get_float("spectrum_analyzer", "f_max_hz", 4.5e6)
    sample_rate = r.get_float("spectrum_analyzer", "sample_rate_hz", 1e7)
    duration = r.get_float("spectrum_analyzer", "duration_s", 0.25)
    if not 0 < rbw or not 0 < vbw:
        raise r.err("spectrum_analyzer", "rbw_hz", "rbw and vbw must be > 0")
    if not f_min < f_max:
        raise r.err("spectrum_analyzer", "f_min_hz", "need f_min < f_max")
    if sample_rate < 2.0 * f_max:
        raise r.err(
            "spectrum_analyzer",
            "sample_rate_hz",
            f"must be >= 2 * f_max = {2.0 * f_max:g} Hz",
        )
    if duration <= 0:
        raise r.err("spectrum_analyzer", "duration_s", "must be > 0")

    analysis_freq = r.get_float(
        "power_scan", "analysis_freq_hz", _DEFAULT_ANALYSIS_FREQ[source_name]
    )
    if not f_min <= analysis_freq <= f_max:
        raise r.err(
            "power_scan", "analysis_freq_hz", "must lie inside the analyzer band"
        )
    scan_powers = r.get_floats("power_scan", "seed_powers_w", _DEFAULT_SEED_POWERS)
    if len(scan_powers) < 3:
        raise r.err("power_scan", "seed_powers_w", "need at least 3 seed powers")
    if any(p <= 0 for p in scan_powers):
        raise r.err("power_scan", "seed_powers_w", "powers must be > 0")
    scan_point_duration = r.get_float("power_scan", "point_duration_s", 0.3)

    sweep_axis = r.get_str("sweep", "axis", None)
    if axis_override is not None:
        sweep_axis = axis_override
    grid_spec = r.get_str("sweep", "grid", None)
    if grid_override is not None:
        grid_spec = grid_override
    sweep_grid = None
    if grid_spec is not None:
        try:
            sweep_grid = _parse_grid(grid_spec)
        except ValueError as exc:
            raise r.err("sweep", "grid", str(exc)) from None

    beat_span = r.get_float("beat", "span_hz", _DEFAULT_BEAT_SPAN[source_name])
    beat_rbw = r.get_float("beat", "rbw_hz", _DEFAULT_BEAT_RBW[source_name])
    if not beat_span > beat_rbw > 0:
        raise r.err("beat", "span_hz", "need span > rbw > 0")

    out_dir = out_dir_override or r.get_str("run", "out_dir", None)

    return ExperimentConfig(
        seed=seed,
        medium_params=medium_params,
        calibration=calibration,
        source=source,
        source_name=source_name,
        budget=budget,
        detector=detector,
        seed_power=seed_power,
        rbw=rbw,
        vbw=vbw,
        f_min=f_min,
        f_max=f_max,
        sample_rate=sample_rate,
        duration=duration,
        analysis_freq=analysis_freq,
        scan_seed_powers=tuple(scan_powers),
        scan_point_duration=scan_point_duration,
        sweep_axis=sweep_axis,
        sweep_grid=sweep_grid,
        beat_span=beat_span,
        beat_rbw=beat_rbw,
        out_dir=Path(out_dir) if out_dir else None,
        path=path,
    )
