"""End-to-end compositions: spectra, power scans, sweeps, calibration.

Everything here is deterministic given an :class:`ExperimentConfig`;
randomness enters only through labeled per-stage seeds derived from the
config's master seed.
"""

from __future__ import annotations

import configparser
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .analysis import (
    LineFit,
    PowerScanPoint,
    fit_noise_vs_power,
    max_squeezing,
    slope_ratio_to_db,
    squeezing_bandwidth,
)
from .config import ExperimentConfig
from .detection import (
    SpectralShapePreset,
    normalized_noise_target,
    shape_preset_for,
    snl_calibration,
    spectrum_analyzer,
    subtract_background,
    synthesize_coherent_trace,
    synthesize_difference_trace,
)
from .medium import (
    LossBudget,
    MediumCalibration,
    MediumParams,
    SweepResult,
    composed_noise,
    squeezing_vs,
)
from .noise_core import TwinBeamModel
from .probe_source import ProbeSource, beat_spectrum, fit_beat_fwhm
from .spectra import NoiseSpectrum

__all__ = [
    "SpectrumRun",
    "PowerScanRun",
    "run_spectrum",
    "run_power_scan",
    "run_sweep",
    "run_beat",
    "predicted_noise_curve",
    "CalibrationTargets",
    "fit_calibration",
]


def predicted_noise_curve(
    freqs: np.ndarray,
    params: MediumParams,
    cal: MediumCalibration,
    budget: LossBudget,
    source: ProbeSource,
    preset: SpectralShapePreset | None = None,
    seed_power: float = 1.0,
) -> np.ndarray:
    """Deterministic SNL-normalized noise spectrum of the full chain."""
    if preset is None:
        preset = shape_preset_for(source)
    response, model, _ = composed_noise(params, cal, budget, seed_power)
    return normalized_noise_target(
        freqs, model, source, preset, excess_noise=response.excess_noise
    )


@dataclass(frozen=True)
class SpectrumRun:
    """Normalized twin-beam spectrum with its SNL and headline numbers."""

    normalized: NoiseSpectrum
    snl: NoiseSpectrum
    min_freq_hz: float
    min_db: float
    bandwidth_hz: float
    bandwidth_exceeds_span: bool
    gain: float
    detected_power_w: float


def _measured_spectrum(config: ExperimentConfig, label: str) -> NoiseSpectrum:
    """Synthesize, analyze and background-subtract the twin-beam trace."""
    response, model, _ = composed_noise(
        config.medium_params, config.calibration, config.budget, config.seed_power
    )
    trace = synthesize_difference_trace(
        model,
        config.source,
        shape_preset_for(config.source),
        config.duration,
        config.sample_rate,
        config.stage_seed(label),
        excess_noise=response.excess_noise,
        detector=config.detector,
        max_analysis_freq=config.f_max,
    )
    spec = spectrum_analyzer(
        trace, config.rbw, config.vbw, f_min=config.f_min, f_max=config.f_max
    )
    floor_db = 10.0 * math.log10(config.detector.floor_psd * config.rbw)
    return subtract_background(spec, floor_db)


def run_spectrum(config: ExperimentConfig) -> SpectrumRun:
    """Twin-beam noise spectrum normalized to a matched-power SNL trace."""
    response, model, _ = composed_noise(
        config.medium_params, config.calibration, config.budget, config.seed_power
    )
    twin = _measured_spectrum(config, "spectrum/twin")
    snl_raw = snl_calibration(
        model.detected_total,
        config.detector,
        config.duration,
        config.sample_rate,
        config.stage_seed("spectrum/snl"),
        rbw=config.rbw,
        vbw=config.vbw,
        f_min=config.f_min,
        f_max=config.f_max,
    )
    floor_db = 10.0 * math.log10(config.detector.floor_psd * config.rbw)
    snl = subtract_background(snl_raw, floor_db)
    normalized = twin.normalize(snl)
    band = (float(normalized.freqs[0]), float(normalized.freqs[-1]))
    f_min_sq, db_min = max_squeezing(normalized, band)
    bw = squeezing_bandwidth(normalized)
    return SpectrumRun(
        normalized=normalized,
        snl=snl,
        min_freq_hz=f_min_sq,
        min_db=db_min,
        bandwidth_hz=bw.width_hz,
        bandwidth_exceeds_span=bw.exceeds_span,
        gain=response.gain,
        detected_power_w=model.detected_total,
    )


@dataclass(frozen=True)
class PowerScanRun:
    """Noise-vs-power scan of twin beams against the coherent reference."""

    twin_points: list[PowerScanPoint]
    snl_points: list[PowerScanPoint]
    twin_fit: LineFit
    snl_fit: LineFit
    slope_ratio: float
    squeezing_db: float
    analysis_freq_hz: float


def _noise_at_frequency(trace, rbw: float, f0: float) -> tuple[float, float]:
    """Mean linear noise power (RBW units) near f0, with standard error.

    Averages the Welch bins within one RBW-wide window around f0 (what a
    marker reads in zero-span); wider windows would alias the curvature
    of structured spectra into the reading.
    """
    spec = spectrum_analyzer(trace, rbw, rbw)  # no video smoothing here
    sel = np.abs(spec.freqs - f0) <= rbw / 2.0
    if not np.any(sel):
        sel = np.argmin(np.abs(spec.freqs - f0))
        sel = np.array([sel])
    linear = spec.power_linear[sel]
    mean = float(np.mean(linear))
    n_segments = max(int(trace.duration * rbw / 1.5), 1)
    n_eff = linear.size * n_segments
    return mean, mean / math.sqrt(n_eff)


def _scan_point(config: ExperimentConfig, seed_power: float, index: int):
    params = config.medium_params
    response, model, _ = composed_noise(
        params, config.calibration, config.budget, seed_power
    )
    twin_trace = synthesize_difference_trace(
        model,
        config.source,
        shape_preset_for(config.source),
        config.scan_point_duration,
        config.sample_rate,
        config.stage_seed(f"power-scan/twin/{index}"),
        excess_noise=response.excess_noise,
        detector=config.detector,
    )
    coh_trace = synthesize_coherent_trace(
        model.detected_total,
        config.detector,
        config.scan_point_duration,
        config.sample_rate,
        config.stage_seed(f"power-scan/snl/{index}"),
    )
    floor_rbw = config.detector.floor_psd * config.rbw
    f0 = config.analysis_freq
    twin_noise, twin_sigma = _noise_at_frequency(twin_trace, config.rbw, f0)
    coh_noise, coh_sigma = _noise_at_frequency(coh_trace, config.rbw, f0)
    twin_point = PowerScanPoint(
        total_power=model.detected_total,
        noise_power=twin_noise - floor_rbw,
        std_dev=twin_sigma,
    )
    snl_point = PowerScanPoint(
        total_power=model.detected_total,
        noise_power=coh_noise - floor_rbw,
        std_dev=coh_sigma,
    )
    return twin_point, snl_point


def _reweight(points: list[PowerScanPoint]) -> list[PowerScanPoint]:
    """Rescale uncertainties onto an unweighted-fit prediction.

    A sigma taken from the measured value itself correlates weight with
    noise and biases the weighted slope low; anchoring it to the fitted
    line keeps the relative precision while decoupling the weights.
    """
    fit = fit_noise_vs_power(
        [replace(p, std_dev=0.0) for p in points]
    )
    out = []
    for p in points:
        predicted = fit.intercept + fit.slope * p.total_power
        if predicted <= 0.0 or p.noise_power <= 0.0 or p.std_dev == 0.0:
            out.append(p)
        else:
            out.append(replace(p, std_dev=p.std_dev * predicted / p.noise_power))
    return out


def run_power_scan(config: ExperimentConfig) -> PowerScanRun:
    """Slope-method scan: one twin and one coherent point per seed power.

    Points run in a small work pool; per-point seeds are pre-derived so
    the outcome does not depend on scheduling.
    """
    indices = range(len(config.scan_seed_powers))
    workers = min(4, os.cpu_count() or 1, len(config.scan_seed_powers))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(
            pool.map(
                lambda i: _scan_point(config, config.scan_seed_powers[i], i), indices
            )
        )
    twin_points = _reweight([r[0] for r in results])
    snl_points = _reweight([r[1] for r in results])
    twin_fit = fit_noise_vs_power(twin_points)
    snl_fit = fit_noise_vs_power(snl_points)
    ratio = twin_fit.slope / snl_fit.slope
    return PowerScanRun(
        twin_points=twin_points,
        snl_points=snl_points,
        twin_fit=twin_fit,
        snl_fit=snl_fit,
        slope_ratio=ratio,
        squeezing_db=slope_ratio_to_db(twin_fit, snl_fit),
        analysis_freq_hz=config.analysis_freq,
    )


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Gain and squeezing along the configured parameter axis."""
    if config.sweep_axis is None:
        raise ValueError("no sweep axis configured; set [sweep] axis or --axis")
    if config.sweep_grid is None:
        raise ValueError("no sweep grid configured; set [sweep] grid or --grid")
    start, stop, count = config.sweep_grid
    values = np.linspace(start, stop, count)
    return squeezing_vs(
        config.sweep_axis,
        values,
        config.calibration,
        config.budget,
        config.medium_params,
    )


def run_beat(config: ExperimentConfig) -> tuple[NoiseSpectrum, float]:
    """Pump-probe beat trace for the configured source plus fitted FWHM."""
    spec = beat_spectrum(config.source, config.beat_span, config.beat_rbw)
    return spec, fit_beat_fwhm(spec)


# --- calibration fitting -------------------------------------------------

TARGETS_SCHEMA_ID = "twinbeam-cal-targets-1"


@dataclass(frozen=True)
class CalibrationTargets:
    """Anchors the shipped calibration must reproduce.

    The squeezing anchor pins the synthesized spectrum level at the
    analysis frequency for the EOM chain at the reference operating
    point; the two optimum constraints pin where the two-photon-detuning
    and temperature sweeps turn around.
    """

    squeezing_db: float
    analysis_freq_hz: float
    pump_power_w: float
    delta_one_hz: float
    delta_two_hz: float
    temperature_c: float
    delta_optimum_hz: float
    temp_optimum_c: float

    @classmethod
    def from_file(cls, path) -> "CalibrationTargets":
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise FileNotFoundError(f"targets file not found: {path}")
        schema = cp.get("targets", "schema_id", fallback=None)
        if schema != TARGETS_SCHEMA_ID:
            raise ValueError(
                f"{path}: unsupported targets schema {schema!r}, "
                f"expected {TARGETS_SCHEMA_ID!r}"
            )
        required = [
            "squeezing_db",
            "analysis_freq_hz",
            "pump_power_w",
            "delta_one_hz",
            "delta_two_hz",
            "temperature_c",
            "delta_optimum_hz",
            "temp_optimum_c",
        ]
        values = {}
        for key in required:
            if not cp.has_option("anchors", key):
                raise ValueError(f"{path}: missing anchor entry {key!r}")
            values[key] = float(cp.get("anchors", key))
        return cls(**values)

    def to_file(self, path) -> None:
        cp = configparser.ConfigParser()
        cp["targets"] = {"schema_id": TARGETS_SCHEMA_ID}
        cp["anchors"] = {
            "squeezing_db": repr(self.squeezing_db),
            "analysis_freq_hz": repr(self.analysis_freq_hz),
            "pump_power_w": repr(self.pump_power_w),
            "delta_one_hz": repr(self.delta_one_hz),
            "delta_two_hz": repr(self.delta_two_hz),
            "temperature_c": repr(self.temperature_c),
            "delta_optimum_hz": repr(self.delta_optimum_hz),
            "temp_optimum_c": repr(self.temp_optimum_c),
        }
        with open(path, "w") as fh:
            cp.write(fh)

    def anchor_params(self) -> MediumParams:
        return MediumParams(
            pump_power=self.pump_power_w,
            delta_one=self.delta_one_hz,
            delta_two=self.delta_two_hz,
            temperature=self.temperature_c,
        )


def _anchor_noise(
    cal: MediumCalibration,
    targets: CalibrationTargets,
    budget: LossBudget,
    source: ProbeSource,
    preset: SpectralShapePreset,
) -> float:
    """Synthesized-spectrum noise level (linear, SNL units) at the anchor."""
    freqs = np.array([targets.analysis_freq_hz])
    return float(
        predicted_noise_curve(
            freqs, targets.anchor_params(), cal, budget, source, preset
        )[0]
    )


def _sweep_noise(cal, params, budget) -> float:
    _, _, noise = composed_noise(params, cal, budget)
    return noise


def _delta_slope(cal, targets, budget) -> float:
    h = 1e6
    base = targets.anchor_params()
    lo = replace(base, delta_two=targets.delta_optimum_hz - h)
    hi = replace(base, delta_two=targets.delta_optimum_hz + h)
    return (_sweep_noise(cal, hi, budget) - _sweep_noise(cal, lo, budget)) / (2 * h)


def _temp_slope(cal, targets, budget) -> float:
    h = 0.25
    base = targets.anchor_params()
    lo = replace(base, temperature=targets.temp_optimum_c - h)
    hi = replace(base, temperature=targets.temp_optimum_c + h)
    return (_sweep_noise(cal, hi, budget) - _sweep_noise(cal, lo, budget)) / (2 * h)


def fit_calibration(
    targets: CalibrationTargets,
    start: MediumCalibration,
    budget: LossBudget | None = None,
    source: ProbeSource | None = None,
    preset: SpectralShapePreset | None = None,
    max_iterations: int = 60,
    tolerance: float = 1e-13,
) -> MediumCalibration:
    """Fit the gain and excess-noise coefficients to the anchor targets.

    Solves three coefficients against three constraints by alternating
    exact one-dimensional solves: ``g0`` against the squeezing anchor
    (bisection), then each excess-noise amplitude against its optimum
    condition, which is linear in the amplitude. Deterministic for a
    fixed starting calibration.
    """
    from .probe_source import EomSideband

    if budget is None:
        budget = LossBudget()
    if source is None:
        source = EomSideband()
    if preset is None:
        preset = shape_preset_for(source)

    target_linear = 10.0 ** (targets.squeezing_db / 10.0)
    cal = start
    for _ in range(max_iterations):
        prev = cal

        def anchor_residual(g0: float) -> float:
            g0 = max(g0, 1e-12)
            return (
                _anchor_noise(replace(cal, g0=g0), targets, budget, source, preset)
                - target_linear
            )

        if anchor_residual(0.0) <= 0.0:
            # No-gain noise already at or below the anchor: no-gain solution.
            g0 = 1e-12
        else:
            lo, hi = 1e-12, 1.0
            while anchor_residual(hi) > 0.0 and hi < 1e3:
                hi *= 2.0
            if anchor_residual(hi) > 0.0:
                raise ValueError(
                    "infeasible targets: squeezing anchor "
                    f"{targets.squeezing_db} dB unreachable (residual "
                    f"{anchor_residual(hi):.3g} at g0={hi:g})"
                )
            g0 = brentq(anchor_residual, lo, hi, xtol=1e-15, rtol=1e-15)
        cal = replace(cal, g0=max(g0, 1e-12))

        # The sweep noise is affine in each excess amplitude, so the
        # optimum condition solves exactly from two slope evaluations.
        for field_name, slope_fn in (
            ("xs_delta_amp", _delta_slope),
            ("xs_t_amp", _temp_slope),
        ):
            s0 = slope_fn(replace(cal, **{field_name: 0.0}), targets, budget)
            s1 = slope_fn(replace(cal, **{field_name: 1.0}), targets, budget)
            gain_slope = s1 - s0
            amp = -s0 / gain_slope if gain_slope != 0.0 else 0.0
            cal = replace(cal, **{field_name: max(amp, 0.0)})

        converged = all(
            math.isclose(
                getattr(cal, f), getattr(prev, f), rel_tol=tolerance, abs_tol=1e-18
            )
            for f in ("g0", "xs_delta_amp", "xs_t_amp")
        )
        if converged:
            break
    residuals = (
        _anchor_noise(cal, targets, budget, source, preset) - target_linear,
        _delta_slope(cal, targets, budget),
        _temp_slope(cal, targets, budget),
    )
    if abs(residuals[0]) > 1e-9:
        raise ValueError(
            f"calibration did not converge: anchor residual {residuals[0]:.3g}"
        )
    return cal
