"""Probe-generation models: beat lines, jitter, budgets, excess noise."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import curve_fit
from scipy.signal import welch

from twinbeam.config import packaged_calibration_path
from twinbeam.medium import LossBudget, MediumCalibration, MediumParams, composed_noise
from twinbeam.probe_source import (
    EomSideband,
    IndependentLasers,
    PhaseLockedLoop,
    beat_spectrum,
    effective_squeezing_under_jitter,
    eom_chain_budget,
    fit_beat_fwhm,
    jitter_phase,
    jitter_series,
    pll_excess_noise_db,
    source_preset,
)


class TestSourcePresets:
    def test_named_presets(self):
        assert isinstance(source_preset("independent"), IndependentLasers)
        assert isinstance(source_preset("pll"), PhaseLockedLoop)
        assert isinstance(source_preset("eom"), EomSideband)

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="eom.*independent.*pll"):
            source_preset("aom")

    def test_default_linewidths(self):
        assert source_preset("independent").beat_fwhm == 5e6
        assert source_preset("pll").beat_fwhm == 1.0
        assert source_preset("eom").beat_fwhm == 1.0

    def test_overrides(self):
        src = source_preset("pll", excess_noise_db=3.0)
        assert src.excess_noise_db == 3.0

    def test_sideband_fraction_invariant(self):
        with pytest.raises(ValueError, match="sum"):
            EomSideband(sideband_fracs=(0.5, 0.5, 0.2))

    def test_band_ordering_invariant(self):
        with pytest.raises(ValueError):
            PhaseLockedLoop(excess_noise_band=(4e6, 0.72e6))


class TestBeatSpectrum:
    def test_independent_fwhm_recovered(self):
        spec = beat_spectrum(IndependentLasers(), span=4e7, rbw=1e4)
        assert fit_beat_fwhm(spec) == pytest.approx(5e6, rel=0.10)

    def test_locked_fwhm_recovered(self):
        spec = beat_spectrum(PhaseLockedLoop(), span=40.0, rbw=0.1)
        assert fit_beat_fwhm(spec) == pytest.approx(1.0, rel=0.10)
        spec = beat_spectrum(EomSideband(), span=40.0, rbw=0.1)
        assert fit_beat_fwhm(spec) == pytest.approx(1.0, rel=0.10)

    def test_resolution_limited_line(self):
        src = EomSideband()  # 1 Hz line
        rbw = 10.0 * src.beat_fwhm
        spec = beat_spectrum(src, span=400.0, rbw=rbw)
        assert fit_beat_fwhm(spec) == pytest.approx(rbw, rel=0.10)

    def test_centers(self):
        assert IndependentLasers().beat_center == pytest.approx(9.192631770e9)
        assert PhaseLockedLoop().beat_center == pytest.approx(9.2e9)
        assert EomSideband().beat_center == pytest.approx(9.2e9)

    def test_invalid_span_rbw(self):
        with pytest.raises(ValueError):
            beat_spectrum(EomSideband(), span=1.0, rbw=2.0)

    @settings(max_examples=12, deadline=None)
    @given(log_fwhm=st.floats(min_value=0.0, max_value=7.0))
    def test_fwhm_consistency_property(self, log_fwhm):
        # Estimator consistent within 10% whenever FWHM/RBW >= 10.
        fwhm = 10.0**log_fwhm
        src = IndependentLasers(beat_fwhm=fwhm)
        spec = beat_spectrum(src, span=12.0 * fwhm, rbw=fwhm / 10.0)
        assert fit_beat_fwhm(spec) == pytest.approx(fwhm, rel=0.10)


class TestJitterSeries:
    def test_zero_linewidth_is_silent(self):
        series = jitter_series(IndependentLasers(beat_fwhm=0.0), 1e-3, 1e-6, 1)
        assert np.all(series.values == 0.0)

    def test_deterministic_per_seed(self):
        a = jitter_series(IndependentLasers(), 1e-4, 1e-8, 9)
        b = jitter_series(IndependentLasers(), 1e-4, 1e-8, 9)
        assert np.array_equal(a.values, b.values)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            jitter_series(IndependentLasers(), 1e-3, -1.0, 0)

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="100"):
            jitter_series(IndependentLasers(), 1e-6, 1e-7, 0)

    def test_independent_linewidth_recovered_from_phase(self):
        # Periodogram of exp(i phi) must show a Lorentzian of the
        # configured width: the independent check that the random-walk
        # increment variance maps to the right linewidth.
        fwhm = 5e6
        fs = 2e8
        series = jitter_series(IndependentLasers(beat_fwhm=fwhm), 1e-3, 1 / fs, 21)
        phasor = np.exp(1j * jitter_phase(series)[:-1])
        freqs, psd = welch(phasor, fs=fs, nperseg=2048, return_onesided=False)
        freqs = np.fft.fftshift(freqs)
        psd = np.fft.fftshift(psd)

        def lorentz(f, width, amp):
            return amp * (width / 2) ** 2 / (f**2 + (width / 2) ** 2)

        popt, _ = curve_fit(lorentz, freqs, psd, p0=[1e6, psd.max()])
        assert abs(popt[0]) == pytest.approx(fwhm, rel=0.15)

    def test_locked_mean_detuning_is_tiny(self):
        # 1 Hz linewidth: the mean frequency offset over 1 ms windows
        # has rms sqrt(fwhm / (2 pi T)) ~= 12.6 Hz, far below 1 kHz.
        series = jitter_series(PhaseLockedLoop(), 0.2, 1e-5, 3)
        windows = series.values.reshape(-1, 100)  # 1 ms each
        rms = float(np.sqrt(np.mean(windows.mean(axis=1) ** 2)))
        assert rms < 100.0
        assert rms == pytest.approx(math.sqrt(1.0 / (2 * math.pi * 1e-3)), rel=0.5)


@pytest.fixture(scope="module")
def noise_vs_detuning():
    cal = MediumCalibration.from_file(packaged_calibration_path())
    grid = np.linspace(-4e8, 4e8, 4001)
    noise = np.array(
        [
            composed_noise(MediumParams(delta_two=d), cal, LossBudget())[2]
            for d in grid
        ]
    )
    return grid, noise


class TestJitterAveragedSqueezing:
    def test_zero_linewidth_returns_curve_value(self, noise_vs_detuning):
        grid, noise = noise_vs_detuning
        src = IndependentLasers(beat_fwhm=0.0)
        out = effective_squeezing_under_jitter(src, grid, noise, delta0=0.0)
        v0 = noise[np.argmin(np.abs(grid))]
        assert out == pytest.approx(10 * math.log10(v0), abs=1e-9)

    def test_eom_degradation_negligible(self, noise_vs_detuning):
        grid, noise = noise_vs_detuning
        out = effective_squeezing_under_jitter(EomSideband(), grid, noise)
        v0 = 10 * math.log10(noise[np.argmin(np.abs(grid))])
        assert abs(out - v0) < 0.01

    def test_independent_worse_than_eom(self, noise_vs_detuning):
        grid, noise = noise_vs_detuning
        free = effective_squeezing_under_jitter(IndependentLasers(), grid, noise)
        locked = effective_squeezing_under_jitter(EomSideband(), grid, noise)
        assert free > locked

    def test_degradation_nonnegative_for_convex_curve(self, noise_vs_detuning):
        grid, noise = noise_vs_detuning
        v0 = 10 * math.log10(noise[np.argmin(np.abs(grid))])
        for fwhm in (1e3, 1e5, 1e6, 5e6):
            out = effective_squeezing_under_jitter(
                IndependentLasers(beat_fwhm=fwhm), grid, noise
            )
            assert out >= v0 - 1e-12

    def test_insufficient_grid_errors(self, noise_vs_detuning):
        grid, noise = noise_vs_detuning
        src = IndependentLasers(beat_fwhm=5e7)  # tails beyond +/-400 MHz
        with pytest.raises(ValueError, match="exceeds"):
            effective_squeezing_under_jitter(src, grid, noise)

    def test_delta0_outside_grid(self, noise_vs_detuning):
        grid, noise = noise_vs_detuning
        with pytest.raises(ValueError, match="outside"):
            effective_squeezing_under_jitter(EomSideband(), grid, noise, delta0=5e8)


class TestEomChainBudget:
    def test_shipped_budget_is_8_percent(self):
        probe, rejected = eom_chain_budget(EomSideband())
        assert probe == pytest.approx(0.08, abs=1e-15)
        assert probe + sum(rejected.values()) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_chain(self):
        probe, _ = eom_chain_budget(EomSideband(etalon_chain_transmissivity=1.0))
        assert probe == pytest.approx(0.10, abs=1e-15)

    def test_no_sideband_no_probe(self):
        probe, rejected = eom_chain_budget(
            EomSideband(sideband_fracs=(0.0, 0.1, 0.8))
        )
        assert probe == 0.0
        assert probe + sum(rejected.values()) == pytest.approx(1.0, abs=1e-12)

    def test_fractions_in_unit_interval(self):
        probe, rejected = eom_chain_budget(EomSideband())
        assert 0.0 <= probe <= 1.0
        assert all(0.0 <= v <= 1.0 for v in rejected.values())

    def test_wrong_variant_type_error(self):
        with pytest.raises(TypeError):
            eom_chain_budget(PhaseLockedLoop())


class TestPllExcessNoise:
    def test_inside_band(self):
        assert pll_excess_noise_db(PhaseLockedLoop(), 2e6) == 6.0

    def test_below_band(self):
        assert pll_excess_noise_db(PhaseLockedLoop(), 0.23e6) == 0.0

    def test_above_band(self):
        assert pll_excess_noise_db(PhaseLockedLoop(), 5e6) == 0.0

    def test_other_sources_no_op(self):
        assert pll_excess_noise_db(EomSideband(), 2e6) == 0.0
        assert pll_excess_noise_db(IndependentLasers(), 2e6) == 0.0
