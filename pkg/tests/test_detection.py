"""Detection chain: synthesis fidelity, analyzer behavior, SNL integrity."""

import math

import numpy as np
import pytest

from twinbeam.detection import (
    SHAPE_PRESETS,
    DetectorModel,
    SpectralShapePreset,
    TimeTrace,
    normalized_noise_target,
    shape_preset_for,
    snl_calibration,
    snl_psd_level,
    spectrum_analyzer,
    subtract_background,
    synthesize_coherent_trace,
    synthesize_dark_trace,
    synthesize_difference_trace,
)
from twinbeam.noise_core import TwinBeamModel, lossy_noise_ratio
from twinbeam.probe_source import EomSideband, IndependentLasers, PhaseLockedLoop
from twinbeam.spectra import NoiseSpectrum

FS = 1e7
RBW = 30e3
VBW = 300.0
DETECTOR = DetectorModel()


def white_trace(level: float, duration: float, seed: int, fs: float = FS) -> TimeTrace:
    rng = np.random.default_rng(seed)
    n = int(duration * fs)
    # Unit-variance white noise has one-sided PSD 2/fs; scale to level.
    return TimeTrace(
        samples=math.sqrt(level * fs / 2.0) * rng.standard_normal(n),
        sample_rate=fs,
    )


class TestSpectrumAnalyzer:
    def test_white_input_level_and_scatter(self):
        level = 4.0
        trace = white_trace(level, 0.1, seed=1)
        spec = spectrum_analyzer(trace, RBW, RBW)  # no video smoothing
        expected_db = 10 * math.log10(level * RBW)
        assert np.mean(spec.power_db) == pytest.approx(expected_db, abs=0.05)
        # Scatter consistent with the number of averaged segments.
        n_segments = trace.samples.size // int(round(1.5 * FS / RBW))
        rel_std = np.std(spec.power_linear) / np.mean(spec.power_linear)
        assert 0.4 / math.sqrt(n_segments) < rel_std < 2.0 / math.sqrt(n_segments)

    def test_sine_resolution(self):
        fs, f0 = FS, 1e6
        n = int(0.05 * fs)
        t = np.arange(n) / fs
        rng = np.random.default_rng(2)
        samples = 0.2 * rng.standard_normal(n) + 0.05 * np.sin(2 * np.pi * f0 * t)
        spec = spectrum_analyzer(TimeTrace(samples, fs), RBW, RBW)
        peak_idx = int(np.argmax(spec.power_db))
        assert spec.freqs[peak_idx] == pytest.approx(f0, abs=RBW)
        # Equivalent width of the displayed tone ~ RBW: total tone power
        # over peak density (grid too coarse for a direct FWHM readout).
        linear = spec.power_linear
        floor = np.median(linear)
        tone = np.clip(linear - floor, 0.0, None)
        df = spec.freqs[1] - spec.freqs[0]
        window = np.abs(spec.freqs - f0) < 5 * RBW
        eq_width = np.sum(tone[window]) * df / tone[peak_idx]
        assert 0.5 * RBW < eq_width < 2.5 * RBW

    def test_parseval_consistency(self):
        trace = white_trace(2.0, 0.05, seed=3)
        spec = spectrum_analyzer(trace, RBW, RBW)
        df = spec.freqs[1] - spec.freqs[0]
        total = np.sum(spec.power_linear / spec.rbw) * df
        assert total == pytest.approx(np.var(trace.samples), rel=0.05)

    def test_rbw_unresolvable(self):
        trace = white_trace(1.0, 0.05, seed=4)
        with pytest.raises(ValueError, match="unresolvable"):
            spectrum_analyzer(trace, 1.0 / trace.duration, VBW)

    def test_needs_ten_segments(self):
        trace = TimeTrace(np.random.default_rng(5).standard_normal(2000), FS)
        with pytest.raises(ValueError, match="segments"):
            spectrum_analyzer(trace, RBW, VBW)

    def test_video_smoothing_reduces_scatter(self):
        trace = white_trace(1.0, 0.05, seed=6)
        rough = spectrum_analyzer(trace, RBW, RBW)
        smooth = spectrum_analyzer(trace, RBW, VBW)
        assert np.std(smooth.power_db) <= np.std(rough.power_db) + 1e-12


class TestSynthesis:
    def test_deterministic_per_seed(self):
        a = synthesize_coherent_trace(1e-3, DETECTOR, 0.01, FS, 42)
        b = synthesize_coherent_trace(1e-3, DETECTOR, 0.01, FS, 42)
        assert np.array_equal(a.samples, b.samples)

    def test_seeds_agree_within_statistics(self):
        levels = []
        for seed in (1, 2):
            trace = synthesize_coherent_trace(1e-3, DETECTOR, 0.05, FS, seed)
            spec = spectrum_analyzer(trace, RBW, VBW, f_min=1e5, f_max=4e6)
            levels.append(np.mean(spec.power_linear))
        assert levels[0] == pytest.approx(levels[1], rel=0.02)

    def test_minimum_length_enforced(self):
        with pytest.raises(ValueError, match="2\\^16"):
            synthesize_coherent_trace(1e-3, DETECTOR, 1e-4, FS, 0)

    def test_undersampling_rejected(self):
        model = TwinBeamModel(gain=4.0, seed_power=1e-4, eta_probe=0.9, eta_conj=0.9)
        with pytest.raises(ValueError, match="undersamples"):
            synthesize_difference_trace(
                model, EomSideband(), SHAPE_PRESETS["eom"], 0.01, FS, 0,
                max_analysis_freq=FS,
            )

    def test_unity_gain_flat_at_snl(self):
        # Coherent-light limit: flat at the SNL within 0.2 dB everywhere.
        model = TwinBeamModel(gain=1.0, seed_power=1e-3)
        trace = synthesize_difference_trace(
            model, EomSideband(), SHAPE_PRESETS["eom"], 0.2, FS, 7,
            detector=DETECTOR,
        )
        spec = spectrum_analyzer(trace, RBW, VBW, f_min=1e5, f_max=4e6)
        floor_db = 10 * math.log10(DETECTOR.floor_psd * RBW)
        clean = subtract_background(spec, floor_db)
        snl_db = 10 * math.log10(snl_psd_level(1e-3, DETECTOR) * RBW)
        assert np.max(np.abs(clean.power_db - snl_db)) < 0.2


@pytest.fixture(scope="module")
def anchor_model():
    # Operating point equivalent to the shipped calibration's default.
    from twinbeam.config import packaged_calibration_path
    from twinbeam.medium import LossBudget, MediumCalibration, MediumParams, composed_noise

    cal = MediumCalibration.from_file(packaged_calibration_path())
    response, model, _ = composed_noise(
        MediumParams(), cal, LossBudget(), seed_power=2e-4
    )
    return model, response.excess_noise


class TestShapePresets:
    def test_preset_lookup_by_source(self):
        assert shape_preset_for(IndependentLasers()) is SHAPE_PRESETS["independent"]
        assert shape_preset_for(PhaseLockedLoop()) is SHAPE_PRESETS["pll"]
        assert shape_preset_for(EomSideband()) is SHAPE_PRESETS["eom"]

    def test_correlation_is_a_unit_multiplier(self):
        freqs = np.linspace(1e4, 1e7, 500)
        for preset in SHAPE_PRESETS.values():
            c = preset.correlation(freqs)
            assert np.all((0.0 <= c) & (c <= 1.0))

    def test_preset_validation(self):
        with pytest.raises(ValueError):
            SpectralShapePreset(tech_corner_hz=-1.0, rolloff_corner_hz=1e6)
        with pytest.raises(ValueError):
            SpectralShapePreset(tech_corner_hz=1e4, rolloff_corner_hz=1e6,
                                corr_floor=1.5)

    def test_eom_target_minimum(self, anchor_model):
        model, excess = anchor_model
        freqs = np.linspace(5e4, 4.5e6, 2000)
        v = normalized_noise_target(
            freqs, model, EomSideband(), SHAPE_PRESETS["eom"], excess
        )
        i = int(np.argmin(v))
        assert 10 * math.log10(v[i]) == pytest.approx(-6.5, abs=0.2)
        assert freqs[i] == pytest.approx(1e6, rel=0.15)
        # Sub-SNL from below 0.15 MHz out to the span edge; only the
        # technical-noise rise at the very bottom of the band exceeds it.
        assert np.all(v[freqs >= 0.15e6] < 1.0)

    def test_independent_target_shape(self, anchor_model):
        model, excess = anchor_model
        freqs = np.linspace(5e4, 4.5e6, 2000)
        v = normalized_noise_target(
            freqs, model, IndependentLasers(), SHAPE_PRESETS["independent"], excess
        )
        i = int(np.argmin(v))
        assert 10 * math.log10(v[i]) == pytest.approx(-3.7, abs=0.2)
        assert freqs[i] == pytest.approx(0.23e6, abs=2e4)
        sub_snl = freqs[v < 1.0]
        assert sub_snl[-1] == pytest.approx(0.72e6, rel=0.2)
        assert np.all(v[freqs > 0.9e6] >= 1.0)

    def test_pll_noisier_than_independent_in_band(self, anchor_model):
        model, excess = anchor_model
        freqs = np.linspace(0.75e6, 3.95e6, 400)
        v_pll = normalized_noise_target(
            freqs, model, PhaseLockedLoop(), SHAPE_PRESETS["pll"], excess
        )
        v_ind = normalized_noise_target(
            freqs, model, IndependentLasers(), SHAPE_PRESETS["independent"], excess
        )
        assert np.all(v_pll > v_ind)

    def test_pll_excess_only_inside_band(self, anchor_model):
        model, excess = anchor_model
        pll = PhaseLockedLoop()
        freqs = np.array([0.23e6, 2e6, 5e6])
        with_excess = normalized_noise_target(
            freqs, model, pll, SHAPE_PRESETS["pll"], excess
        )
        without = normalized_noise_target(
            freqs, model, EomSideband(), SHAPE_PRESETS["pll"], excess
        )
        boost = 10 ** (pll.excess_noise_db / 10.0) - 1.0
        assert with_excess[0] == pytest.approx(without[0], rel=1e-12)
        assert with_excess[1] == pytest.approx(without[1] + boost, rel=1e-12)
        assert with_excess[2] == pytest.approx(without[2], rel=1e-12)

    def test_normalized_spectrum_above_loss_floor(self, anchor_model):
        model, excess = anchor_model
        freqs = np.linspace(5e4, 4.5e6, 1000)
        floor = 1.0 - max(model.eta_probe, model.eta_conj)
        for name, source in (
            ("eom", EomSideband()),
            ("pll", PhaseLockedLoop()),
            ("independent", IndependentLasers()),
        ):
            v = normalized_noise_target(
                freqs, model, source, SHAPE_PRESETS[name], excess
            )
            assert np.all(v >= floor)
            assert np.all(v >= lossy_noise_ratio(model).linear - 1e-12)


class TestSnlIntegrity:
    def test_matched_normalization_is_flat_zero(self):
        spec = snl_calibration(1e-3, DETECTOR, 0.4, FS, 11, f_min=1e5, f_max=4e6)
        floor_db = 10 * math.log10(DETECTOR.floor_psd * RBW)
        clean = subtract_background(spec, floor_db)
        other = snl_calibration(1e-3, DETECTOR, 0.4, FS, 12, f_min=1e5, f_max=4e6)
        normalized = subtract_background(other, floor_db).normalize(clean)
        assert np.max(np.abs(normalized.power_db)) < 0.2
        assert normalized.snl_reference is not None

    def test_snl_scales_3db_per_doubling(self):
        levels = []
        for power, seed in ((1e-3, 13), (2e-3, 14)):
            spec = snl_calibration(power, DETECTOR, 0.1, FS, seed,
                                   f_min=1e5, f_max=4e6)
            floor_db = 10 * math.log10(DETECTOR.floor_psd * RBW)
            clean = subtract_background(spec, floor_db)
            levels.append(np.mean(clean.power_db))
        assert levels[1] - levels[0] == pytest.approx(3.01, abs=0.1)

    def test_snl_linear_in_power(self):
        assert snl_psd_level(2e-3, DETECTOR) == pytest.approx(
            2.0 * snl_psd_level(1e-3, DETECTOR), rel=1e-12
        )

    def test_electronic_floor_10db_below_reference_snl(self):
        dark = synthesize_dark_trace(DETECTOR, 0.1, FS, 15)
        dark_spec = spectrum_analyzer(dark, RBW, VBW, f_min=0.9e6, f_max=1.1e6)
        snl = snl_calibration(
            DETECTOR.floor_reference_power_w, DETECTOR, 0.1, FS, 16,
            f_min=0.9e6, f_max=1.1e6,
        )
        floor_db = 10 * math.log10(DETECTOR.floor_psd * RBW)
        snl_clean = subtract_background(snl, floor_db)
        gap = np.mean(snl_clean.power_db) - np.mean(dark_spec.power_db)
        assert gap == pytest.approx(10.0, abs=0.5)


class TestSubtractBackground:
    def _flat(self, db: float) -> NoiseSpectrum:
        freqs = np.linspace(1e5, 1e6, 10)
        return NoiseSpectrum(freqs, np.full(10, db), rbw=1e5, vbw=1e4)

    def test_floor_10db_down_shifts_half_db(self):
        out = subtract_background(self._flat(0.0), -10.0)
        assert out.power_db[0] == pytest.approx(10 * math.log10(1 - 0.1), abs=1e-9)
        assert out.power_db[0] == pytest.approx(-0.46, abs=0.005)

    def test_floor_30db_down_negligible(self):
        out = subtract_background(self._flat(0.0), -30.0)
        assert abs(out.power_db[0]) < 0.005

    def test_equal_floor_rejected(self):
        with pytest.raises(ValueError, match="non-physical"):
            subtract_background(self._flat(0.0), 0.0)

    def test_spectrum_background(self):
        out = subtract_background(self._flat(0.0), self._flat(-10.0))
        assert out.power_db[3] == pytest.approx(-0.4576, abs=1e-3)

    def test_grid_mismatch(self):
        other = NoiseSpectrum(
            np.linspace(2e5, 2e6, 10), np.zeros(10), rbw=2e5, vbw=1e4
        )
        with pytest.raises(ValueError, match="grid"):
            subtract_background(self._flat(0.0), other)
