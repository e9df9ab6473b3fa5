"""Models of the three probe-generation methods.

Each source is characterized first by its pump-probe beat linewidth,
modeled as pure Wiener (Lorentzian) phase noise, plus method-specific
extras: the PLL's excess intensity-noise band from current modulation,
and the EOM's sideband/etalon power budget.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from . import constants
from .spectra import NoiseSpectrum

__all__ = [
    "IndependentLasers",
    "PhaseLockedLoop",
    "EomSideband",
    "ProbeSource",
    "JitterSeries",
    "source_preset",
    "SOURCE_PRESETS",
    "beat_spectrum",
    "fit_beat_fwhm",
    "jitter_series",
    "effective_squeezing_under_jitter",
    "eom_chain_budget",
    "pll_excess_noise_db",
]


@dataclass(frozen=True)
class IndependentLasers:
    """Two free-running lasers; broad beat from uncorrelated drifts."""

    beat_fwhm: float = constants.BEAT_FWHM_FREE_HZ

    def __post_init__(self):
        if not self.beat_fwhm >= 0.0:
            raise ValueError("beat_fwhm must be >= 0")

    @property
    def beat_center(self) -> float:
        return constants.CS_GROUND_SPLITTING_HZ


@dataclass(frozen=True)
class PhaseLockedLoop:
    """Diode laser locked to the pump via two RF references."""

    beat_fwhm: float = constants.BEAT_FWHM_LOCKED_HZ
    ref_a: float = constants.PLL_REF_A_HZ
    ref_b: float = constants.PLL_REF_B_HZ
    excess_noise_band: tuple[float, float] = constants.PLL_EXCESS_BAND_HZ
    excess_noise_db: float = constants.PLL_EXCESS_NOISE_DB

    def __post_init__(self):
        if not self.beat_fwhm >= 0.0:
            raise ValueError("beat_fwhm must be >= 0")
        lo, hi = self.excess_noise_band
        if not 0.0 < lo < hi:
            raise ValueError(f"excess_noise_band must be ordered, got {self.excess_noise_band}")

    @property
    def beat_center(self) -> float:
        return self.ref_a + self.ref_b


@dataclass(frozen=True)
class EomSideband:
    """Probe taken from the -1st EOM sideband after an etalon chain."""

    beat_fwhm: float = constants.BEAT_FWHM_LOCKED_HZ
    mod_freq: float = constants.EOM_MOD_FREQ_HZ
    rf_power_dbm: float = constants.EOM_RF_POWER_DBM
    sideband_fracs: tuple[float, float, float] = constants.EOM_SIDEBAND_FRACS
    etalon_finesse: float = constants.ETALON_FINESSE
    etalon_chain_transmissivity: float = constants.ETALON_CHAIN_TRANSMISSIVITY

    def __post_init__(self):
        if not self.beat_fwhm >= 0.0:
            raise ValueError("beat_fwhm must be >= 0")
        fracs = self.sideband_fracs
        if len(fracs) != 3 or any(f < 0.0 for f in fracs):
            raise ValueError("sideband_fracs must be 3 non-negative fractions")
        if sum(fracs) > 1.0 + 1e-12:
            raise ValueError(f"sideband fractions sum to {sum(fracs)} > 1")
        if not 0.0 < self.etalon_chain_transmissivity <= 1.0:
            raise ValueError("etalon_chain_transmissivity must lie in (0, 1]")

    @property
    def beat_center(self) -> float:
        return self.mod_freq


ProbeSource = Union[IndependentLasers, PhaseLockedLoop, EomSideband]

SOURCE_PRESETS = {
    "independent": IndependentLasers,
    "pll": PhaseLockedLoop,
    "eom": EomSideband,
}


def source_preset(name: str, **overrides) -> ProbeSource:
    """Build a source from its preset name with optional field overrides."""
    try:
        cls = SOURCE_PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown source preset {name!r}; valid presets: "
            f"{', '.join(sorted(SOURCE_PRESETS))}"
        ) from None
    return cls(**overrides)


@dataclass(frozen=True)
class JitterSeries:
    """Instantaneous two-photon-detuning offsets sampled at step dt."""

    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be > 0")
        values = np.asarray(self.values, dtype=float)
        if values.size < 2:
            raise ValueError("jitter series needs at least 2 samples")
        if not np.all(np.isfinite(values)):
            raise ValueError("jitter series contains non-finite values")
        object.__setattr__(self, "values", values)

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.values**2)))


def _lorentzian(f, center, fwhm, peak):
    hw = fwhm / 2.0
    return peak * hw**2 / ((f - center) ** 2 + hw**2)


def beat_spectrum(source: ProbeSource, span: float, rbw: float) -> NoiseSpectrum:
    """Beat line of pump and probe as a spectrum analyzer would show it.

    Lorentzian of FWHM max(beat_fwhm, rbw), peak-normalized to 0 dB:
    a line narrower than the resolution bandwidth displays at the RBW.
    """
    if not (span > rbw > 0.0):
        raise ValueError(f"need span > rbw > 0, got span={span}, rbw={rbw}")
    center = source.beat_center
    fwhm = max(source.beat_fwhm, rbw)
    # At least two grid points per RBW, bounded for huge span/rbw ratios.
    n_points = int(min(max(1201, 2 * span / rbw + 1), 24001))
    freqs = np.linspace(center - span / 2.0, center + span / 2.0, n_points)
    power = _lorentzian(freqs, center, fwhm, 1.0)
    return NoiseSpectrum(
        freqs=freqs,
        power_db=10.0 * np.log10(power),
        rbw=rbw,
        vbw=rbw,
    )


def fit_beat_fwhm(spectrum: NoiseSpectrum) -> float:
    """Least-squares Lorentzian fit of a beat trace; returns the FWHM.

    Fits in frequencies relative to the peak so the GHz-scale center
    does not swamp the Hz-scale linewidth numerically.
    """
    power = spectrum.power_linear
    center0 = spectrum.freqs[np.argmax(power)]
    offsets = spectrum.freqs - center0
    span = offsets[-1] - offsets[0]
    half = power >= power.max() / 2.0
    fwhm0 = max(np.count_nonzero(half) * (offsets[1] - offsets[0]), span / 1000.0)
    with warnings.catch_warnings():
        # A noiseless trace fits exactly; the singular covariance is fine.
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, _ = curve_fit(
            _lorentzian,
            offsets,
            power,
            p0=[0.0, fwhm0, power.max()],
            maxfev=10000,
        )
    return abs(popt[1])


def jitter_series(
    source: ProbeSource,
    duration: float,
    dt: float,
    rng_seed: int = 0,
) -> JitterSeries:
    """Wiener-phase realization of the beat linewidth.

    The beat phase random-walks with increment variance 2*pi*fwhm*dt per
    step; the returned values are the per-step mean frequency offsets.
    """
    if not dt > 0.0:
        raise ValueError("dt must be > 0")
    n = int(round(duration / dt))
    if n < 100:
        raise ValueError(f"need duration/dt >= 100 samples, got {n}")
    if source.beat_fwhm == 0.0:
        return JitterSeries(dt=dt, values=np.zeros(n))
    rng = np.random.default_rng(rng_seed)
    increments = math.sqrt(2.0 * math.pi * source.beat_fwhm * dt) * rng.standard_normal(n)
    delta = increments / (2.0 * math.pi * dt)
    return JitterSeries(dt=dt, values=delta)


def jitter_phase(series: JitterSeries) -> np.ndarray:
    """Accumulated beat phase of a jitter realization, starting at 0."""
    return np.concatenate(([0.0], np.cumsum(series.values * 2.0 * math.pi * series.dt)))


def effective_squeezing_under_jitter(
    source: ProbeSource,
    delta_grid: np.ndarray,
    noise_linear: np.ndarray,
    delta0: float = 0.0,
) -> float:
    """Jitter-averaged normalized noise, in dB.

    Averages the noise-vs-two-photon-detuning curve over the source's
    stationary Lorentzian detuning distribution (FWHM = beat linewidth)
    centered at ``delta0``. Uses the Cauchy quantile substitution
    delta = delta0 + (fwhm/2) tan(pi (u - 1/2)) so any linewidth is
    integrated with equal-probability nodes; the grid must cover 99.5%
    of the distribution mass.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    noise_linear = np.asarray(noise_linear, dtype=float)
    if delta_grid.ndim != 1 or delta_grid.shape != noise_linear.shape:
        raise ValueError("delta_grid and noise_linear must be matching 1-d arrays")
    if not np.all(np.diff(delta_grid) > 0):
        raise ValueError("delta_grid must be strictly increasing")
    if not (delta_grid[0] <= delta0 <= delta_grid[-1]):
        raise ValueError("delta0 outside the provided grid")
    fwhm = source.beat_fwhm
    if fwhm == 0.0:
        return 10.0 * math.log10(float(np.interp(delta0, delta_grid, noise_linear)))
    gamma = fwhm / 2.0
    mass = 0.995
    u = np.linspace((1.0 - mass) / 2.0, (1.0 + mass) / 2.0, 4001)
    nodes = delta0 + gamma * np.tan(math.pi * (u - 0.5))
    if nodes[0] < delta_grid[0] or nodes[-1] > delta_grid[-1]:
        raise ValueError(
            f"jitter range [{nodes[0]:g}, {nodes[-1]:g}] Hz exceeds the "
            f"noise-curve grid [{delta_grid[0]:g}, {delta_grid[-1]:g}] Hz"
        )
    mean_noise = float(np.mean(np.interp(nodes, delta_grid, noise_linear)))
    return 10.0 * math.log10(mean_noise)


def eom_chain_budget(source: EomSideband) -> tuple[float, dict[str, float]]:
    """Power budget of the EOM + etalon chain, as input-power fractions.

    Returns the fraction delivered to the probe (-1st sideband times the
    chain transmissivity) and where the rest goes. Fractions sum to 1.
    """
    if not isinstance(source, EomSideband):
        raise TypeError(f"eom_chain_budget needs an EomSideband, got {type(source).__name__}")
    minus1, plus1, carrier = source.sideband_fracs
    t_chain = source.etalon_chain_transmissivity
    probe = minus1 * t_chain
    rejected = {
        "carrier": carrier,
        "plus1_sideband": plus1,
        "etalon_loss": minus1 * (1.0 - t_chain),
        "higher_orders": 1.0 - (minus1 + plus1 + carrier),
    }
    return probe, rejected


def pll_excess_noise_db(source: ProbeSource, analysis_freq: float) -> float:
    """Excess intensity noise of the PLL at one analysis frequency, in dB.

    Nonzero only for the PLL variant and only inside its configured
    band; other sources contribute nothing.
    """
    if not isinstance(source, PhaseLockedLoop):
        return 0.0
    lo, hi = source.excess_noise_band
    if lo <= analysis_freq <= hi:
        return source.excess_noise_db
    return 0.0
