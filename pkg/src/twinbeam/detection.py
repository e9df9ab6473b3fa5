"""Balanced detection and spectrum-analyzer emulation.

The intensity-difference photocurrent is synthesized in the frequency
domain: the target one-sided PSD is shaped analytically and inverted
with random spectral phases, which guarantees the requested spectrum in
expectation while the Monte Carlo oracle in :mod:`twinbeam.noise_core`
independently validates the variance levels.

Spectral model, in SNL-normalized linear units:

    V(f) = V_base + (V_uncorr - V_lossy) * [(1 - c(f)) + t(f)] + pll(f)

``V_lossy`` is the correlated difference-noise floor, ``V_uncorr`` the
level with the arm correlation fully lost, ``c(f)`` the correlation
survival of the probe-generation method (the shape multiplier), and
``t(f)`` its low-frequency technical noise. ``V_base`` adds the cell's
excess noise on top of ``V_lossy``. Everything collapses to 1 (flat
shot noise) when the gain is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import constants
from .noise_core import TwinBeamModel, lossy_noise_ratio, uncorrelated_noise_ratio
from .probe_source import ProbeSource, pll_excess_noise_db
from .spectra import NoiseSpectrum

__all__ = [
    "DetectorModel",
    "SpectralShapePreset",
    "SHAPE_PRESETS",
    "shape_preset_for",
    "TimeTrace",
    "normalized_noise_target",
    "synthesize_difference_trace",
    "synthesize_coherent_trace",
    "synthesize_dark_trace",
    "spectrum_analyzer",
    "snl_calibration",
    "subtract_background",
    "snl_psd_level",
]

# Photocurrent-to-voltage conversion constants. The absolute scale of
# the traces cancels in every normalized figure; it is kept physical so
# absolute spectra have well-defined units (V^2/Hz).
_ELECTRON_CHARGE = 1.602176634e-19
_PHOTON_ENERGY_J = 6.62607015e-34 * 2.99792458e8 / 894.6e-9  # Cs D1

# Technical-noise divergence cap; far below the displayed band.
_TECH_NOISE_FLOOR_HZ = 1e4

# Auto-coupled sweep factor tying VBW smoothing to the RBW (k in
# sweep_time = k * span / (rbw * vbw)).
_SWEEP_FACTOR = 2.5


@dataclass(frozen=True)
class DetectorModel:
    """Balanced photodetector pair and its electronic noise floor."""

    quantum_efficiency: float = constants.DETECTOR_QE
    transimpedance: float = constants.TRANSIMPEDANCE_V_PER_A
    electronic_floor_db_below_snl: float = constants.ELECTRONIC_FLOOR_DB_BELOW_SNL
    floor_reference_power_w: float = 1.4e-3

    def __post_init__(self):
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must lie in (0, 1]")
        if not self.transimpedance > 0.0:
            raise ValueError("transimpedance must be > 0")
        if not self.floor_reference_power_w > 0.0:
            raise ValueError("floor_reference_power_w must be > 0")

    @property
    def floor_psd(self) -> float:
        """White electronic-noise PSD, anchored below the reference SNL."""
        return snl_psd_level(self.floor_reference_power_w, self) * 10.0 ** (
            -self.electronic_floor_db_below_snl / 10.0
        )


def snl_psd_level(total_detected_power: float, detector: DetectorModel) -> float:
    """One-sided shot-noise PSD of balanced detection, V^2/Hz.

    Linear in the detected power: S = 2 e I R^2 with I the total DC
    photocurrent. The detector quantum efficiency is part of the arm
    transmission budgets, so the power given here is post-QE.
    """
    if not total_detected_power > 0.0:
        raise ValueError("total_detected_power must be > 0")
    current = total_detected_power * _ELECTRON_CHARGE / _PHOTON_ENERGY_J
    return 2.0 * _ELECTRON_CHARGE * current * detector.transimpedance**2


@dataclass(frozen=True)
class SpectralShapePreset:
    """Squeezing-band shape of one probe-generation method.

    ``c(f) = corr_floor + (1-corr_floor) / (1 + (f/rolloff_corner)^rolloff_exponent)``
    is the correlation survival (in [0, 1]); ``t(f) =
    (tech_corner/f)^tech_exponent`` the low-frequency technical noise.
    """

    tech_corner_hz: float
    rolloff_corner_hz: float
    tech_exponent: float = 2.0
    rolloff_exponent: float = 2.0
    corr_floor: float = 0.0

    def __post_init__(self):
        if not self.tech_corner_hz > 0.0:
            raise ValueError("tech_corner_hz must be > 0")
        if not self.rolloff_corner_hz > 0.0:
            raise ValueError("rolloff_corner_hz must be > 0")
        if not 0.0 <= self.corr_floor < 1.0:
            raise ValueError("corr_floor must lie in [0, 1)")
        for name in ("tech_exponent", "rolloff_exponent"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")

    def correlation(self, freqs: np.ndarray) -> np.ndarray:
        f = np.asarray(freqs, dtype=float)
        surv = 1.0 / (1.0 + (f / self.rolloff_corner_hz) ** self.rolloff_exponent)
        return self.corr_floor + (1.0 - self.corr_floor) * surv

    def technical_noise(self, freqs: np.ndarray) -> np.ndarray:
        f = np.maximum(np.asarray(freqs, dtype=float), _TECH_NOISE_FLOOR_HZ)
        return (self.tech_corner_hz / f) ** self.tech_exponent


# Shape constants are tuned against the shipped calibration so the
# synthesized traces land on the measured anchors: free-running lasers
# squeeze to the fitted 0.421 ratio at 0.23 MHz and lose squeezing past
# ~0.78 MHz; the PLL reaches 0.262 at 0.23 MHz; the EOM sideband
# reaches 0.222 at 1 MHz and stays below shot noise beyond the span.
SHAPE_PRESETS = {
    "independent": SpectralShapePreset(
        tech_corner_hz=24322.863,
        rolloff_corner_hz=3.0864147e6,
        tech_exponent=2.0,
        rolloff_exponent=1.6442716,
    ),
    "pll": SpectralShapePreset(
        tech_corner_hz=12226.228,
        rolloff_corner_hz=4.3144205e6,
    ),
    "eom": SpectralShapePreset(
        tech_corner_hz=2.0e4,
        rolloff_corner_hz=5.0e7,
    ),
}


def shape_preset_for(source: ProbeSource) -> SpectralShapePreset:
    """Shape preset matching a probe source's preset family."""
    from .probe_source import EomSideband, IndependentLasers, PhaseLockedLoop

    if isinstance(source, IndependentLasers):
        return SHAPE_PRESETS["independent"]
    if isinstance(source, PhaseLockedLoop):
        return SHAPE_PRESETS["pll"]
    if isinstance(source, EomSideband):
        return SHAPE_PRESETS["eom"]
    raise TypeError(f"unknown probe source type {type(source).__name__}")


@dataclass(frozen=True)
class TimeTrace:
    """Sampled difference-photocurrent record."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("samples must be a 1-d array with >= 2 points")
        if not self.sample_rate > 0.0:
            raise ValueError("sample_rate must be > 0")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def normalized_noise_target(
    freqs: np.ndarray,
    model: TwinBeamModel,
    source: ProbeSource,
    preset: SpectralShapePreset,
    excess_noise: float = 0.0,
) -> np.ndarray:
    """Deterministic SNL-normalized difference-noise spectrum V(f)."""
    freqs = np.asarray(freqs, dtype=float)
    v_lossy = lossy_noise_ratio(model).linear
    v_uncorr = uncorrelated_noise_ratio(model).linear
    v_base = v_lossy + excess_noise
    budget = v_uncorr - v_lossy
    c = preset.correlation(freqs)
    t = preset.technical_noise(freqs)
    v = v_base + budget * ((1.0 - c) + t)

    from .probe_source import PhaseLockedLoop

    if isinstance(source, PhaseLockedLoop):
        lo, hi = source.excess_noise_band
        in_band = (freqs >= lo) & (freqs <= hi)
        v = v + in_band * (10.0 ** (source.excess_noise_db / 10.0) - 1.0)
    return v


def _synthesize_from_psd(
    psd_fn,
    duration: float,
    sample_rate: float,
    rng_seed: int,
) -> TimeTrace:
    """Gaussian time series whose one-sided PSD follows ``psd_fn``."""
    n = int(round(duration * sample_rate))
    if n < 2**16:
        raise ValueError(
            f"duration * sample_rate = {n} samples; need at least 2^16 "
            "for a usable spectrum estimate"
        )
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    psd = np.asarray(psd_fn(freqs[1:]), dtype=float)
    if np.any(psd < 0.0) or not np.all(np.isfinite(psd)):
        raise ValueError("target PSD must be finite and non-negative")
    rng = np.random.default_rng(rng_seed)
    amp = np.sqrt(psd * sample_rate * n / 2.0)
    z = rng.standard_normal(psd.size) + 1j * rng.standard_normal(psd.size)
    spectrum = np.concatenate(([0.0], amp * z / math.sqrt(2.0)))
    if n % 2 == 0:
        # Nyquist bin of a real signal is real-valued and carries no
        # one-sided doubling, so it needs twice the interior variance.
        spectrum[-1] = 2.0 * spectrum[-1].real
    samples = np.fft.irfft(spectrum, n=n)
    return TimeTrace(samples=samples, sample_rate=sample_rate)


def synthesize_difference_trace(
    model: TwinBeamModel,
    source: ProbeSource,
    preset: SpectralShapePreset,
    duration: float,
    sample_rate: float,
    rng_seed: int,
    excess_noise: float = 0.0,
    detector: DetectorModel | None = None,
    max_analysis_freq: float | None = None,
) -> TimeTrace:
    """Difference-photocurrent record of the twin beams.

    One-sided PSD: SNL(detected power) * V(f) plus the electronic
    floor. ``excess_noise`` is the cell's contribution to the
    normalized noise ratio at the operating point.
    """
    if detector is None:
        detector = DetectorModel()
    if max_analysis_freq is not None and sample_rate < 2.0 * max_analysis_freq:
        raise ValueError(
            f"sample_rate {sample_rate:g} Hz undersamples the requested "
            f"analysis band (need >= {2.0 * max_analysis_freq:g} Hz)"
        )
    snl = snl_psd_level(model.detected_total, detector)

    def psd(freqs):
        v = normalized_noise_target(freqs, model, source, preset, excess_noise)
        return snl * v + detector.floor_psd

    return _synthesize_from_psd(psd, duration, sample_rate, rng_seed)


def spectrum_analyzer(
    trace: TimeTrace,
    rbw: float,
    vbw: float,
    f_min: float | None = None,
    f_max: float | None = None,
) -> NoiseSpectrum:
    """Averaged-periodogram spectrum with RBW/VBW emulation.

    Hann segments sized so the effective noise bandwidth equals the
    RBW; the video filter is applied as zero-phase log-domain smoothing
    over sweep points with the time constant of an auto-coupled sweep.
    """
    if not rbw > 0.0 or not vbw > 0.0:
        raise ValueError("rbw and vbw must be > 0")
    duration = trace.duration
    if rbw < 2.0 / duration:
        raise ValueError(
            f"rbw {rbw:g} Hz unresolvable from a {duration:g} s trace"
        )
    fs = trace.sample_rate
    nperseg = int(round(1.5 * fs / rbw))  # Hann ENBW = 1.5 bins
    nperseg = max(8, min(nperseg, trace.samples.size))
    n_segments = trace.samples.size // nperseg
    if n_segments < 10:
        raise ValueError(
            f"trace holds {n_segments} RBW-resolution segments; need >= 10"
        )
    freqs, psd = signal.welch(
        trace.samples,
        fs=fs,
        window="hann",
        nperseg=nperseg,
        noverlap=nperseg // 2,
        detrend="constant",
        scaling="density",
    )
    freqs, psd = freqs[1:], psd[1:]  # drop DC
    power_db = 10.0 * np.log10(psd * rbw)

    if vbw < rbw:
        grid_step = freqs[1] - freqs[0]
        tau_points = rbw / (2.0 * math.pi * _SWEEP_FACTOR * grid_step)
        if tau_points > 0.05:
            alpha = math.exp(-1.0 / tau_points)
            b, a = [1.0 - alpha], [1.0, -alpha]
            power_db = signal.filtfilt(b, a, power_db)

    spec = NoiseSpectrum(freqs=freqs, power_db=power_db, rbw=rbw, vbw=vbw)
    if f_min is not None or f_max is not None:
        spec = spec.band(
            f_min if f_min is not None else freqs[0],
            f_max if f_max is not None else freqs[-1],
        )
    return spec


def synthesize_coherent_trace(
    total_power: float,
    detector: DetectorModel,
    duration: float,
    sample_rate: float,
    rng_seed: int,
) -> TimeTrace:
    """Balanced-detection record of a 50:50-split coherent beam.

    Flat shot-noise PSD at the detected power plus the electronic floor.
    """
    snl = snl_psd_level(total_power, detector)
    return _synthesize_from_psd(
        lambda freqs: np.full(freqs.shape, snl + detector.floor_psd),
        duration,
        sample_rate,
        rng_seed,
    )


def synthesize_dark_trace(
    detector: DetectorModel,
    duration: float,
    sample_rate: float,
    rng_seed: int,
) -> TimeTrace:
    """Detector record with no light: electronic floor only."""
    return _synthesize_from_psd(
        lambda freqs: np.full(freqs.shape, detector.floor_psd),
        duration,
        sample_rate,
        rng_seed,
    )


def snl_calibration(
    total_power: float,
    detector: DetectorModel,
    duration: float,
    sample_rate: float,
    rng_seed: int,
    rbw: float = constants.RBW_HZ,
    vbw: float = constants.VBW_HZ,
    f_min: float | None = None,
    f_max: float | None = None,
) -> NoiseSpectrum:
    """Shot-noise reference trace of a 50:50-split coherent beam.

    Defines 0 dB for normalization at matched detected power; includes
    the same electronic floor as every other measurement.
    """
    trace = synthesize_coherent_trace(
        total_power, detector, duration, sample_rate, rng_seed
    )
    return spectrum_analyzer(trace, rbw, vbw, f_min=f_min, f_max=f_max)


def subtract_background(
    spectrum: NoiseSpectrum,
    electronic_floor: "NoiseSpectrum | float",
) -> NoiseSpectrum:
    """Remove a measured background in linear power, return in dB.

    ``electronic_floor`` is either a trace on the same grid or a flat
    absolute level in dB. Errors if the floor reaches the spectrum
    anywhere - the subtraction would not be physical.
    """
    if isinstance(electronic_floor, NoiseSpectrum):
        if not np.array_equal(electronic_floor.freqs, spectrum.freqs):
            raise ValueError("background grid does not match spectrum grid")
        floor_lin = electronic_floor.power_linear
    else:
        floor_lin = np.full(spectrum.freqs.shape, 10.0 ** (float(electronic_floor) / 10.0))
    spec_lin = spectrum.power_linear
    if np.any(floor_lin >= spec_lin):
        worst = spectrum.freqs[np.argmin(spec_lin - floor_lin)]
        raise ValueError(
            f"background is at or above the spectrum near {worst:g} Hz; "
            "subtraction would be non-physical"
        )
    from dataclasses import replace

    return replace(spectrum, power_db=10.0 * np.log10(spec_lin - floor_lin))
