"""Figure rendering for the CLI report path.

Every plot goes straight to a file through the Agg backend; nothing
here opens a window. Figures accompany the CSV output, they never
replace it.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import LineFit, PowerScanPoint
from .medium import SweepResult
from .spectra import NoiseSpectrum

__all__ = ["plot_spectrum", "plot_power_scan", "plot_sweep", "plot_beat"]

_AXIS_LABELS = {
    "pump": "pump power (W)",
    "delta1": "one-photon detuning (GHz)",
    "delta2": "two-photon detuning (MHz)",
    "temperature": "cell temperature (°C)",
}
_AXIS_SCALE = {"pump": 1.0, "delta1": 1e-9, "delta2": 1e-6, "temperature": 1.0}


def plot_spectrum(normalized: NoiseSpectrum, path, title: str | None = None) -> None:
    """Normalized intensity-difference spectrum with its 0 dB SNL line."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(normalized.freqs / 1e6, normalized.power_db, lw=1.0, color="crimson",
            label="twin beams")
    ax.axhline(0.0, color="gray", lw=1.2, label="shot-noise limit")
    ax.set_xlabel("analysis frequency (MHz)")
    ax.set_ylabel("noise power relative to SNL (dB)")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_power_scan(
    twin_points: list[PowerScanPoint],
    snl_points: list[PowerScanPoint],
    twin_fit: LineFit,
    snl_fit: LineFit,
    path,
    title: str | None = None,
) -> None:
    """Noise power versus total optical power with both straight-line fits."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for points, fit, color, label in (
        (twin_points, twin_fit, "crimson", "twin beams"),
        (snl_points, snl_fit, "steelblue", "coherent reference"),
    ):
        x = np.array([p.total_power for p in points]) * 1e3
        y = np.array([p.noise_power for p in points])
        yerr = np.array([p.std_dev for p in points])
        ax.errorbar(x, y, yerr=yerr, fmt="o", ms=4, capsize=2, color=color, label=label)
        xfit = np.linspace(0.0, x.max() * 1.05, 50)
        ax.plot(xfit, fit.intercept + fit.slope * xfit / 1e3, "--", lw=1, color=color)
    ax.set_xlabel("total optical power (mW)")
    ax.set_ylabel("noise power (V$^2$ in RBW)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(result: SweepResult, path, title: str | None = None) -> None:
    """Gain and squeezing against the swept parameter on twin axes."""
    scale = _AXIS_SCALE.get(result.axis, 1.0)
    x = result.values * scale
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    ax.plot(x, result.squeezing_db, "o-", ms=3, lw=1, color="crimson")
    ax.axhline(0.0, color="gray", lw=1.0)
    ax.set_xlabel(_AXIS_LABELS.get(result.axis, result.axis))
    ax.set_ylabel("squeezing (dB)", color="crimson")
    ax.tick_params(axis="y", colors="crimson")
    ax2 = ax.twinx()
    ax2.plot(x, result.gains, "s-", ms=3, lw=1, color="steelblue")
    ax2.set_ylabel("gain", color="steelblue")
    ax2.tick_params(axis="y", colors="steelblue")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_beat(spectrum: NoiseSpectrum, fwhm_hz: float, path,
              title: str | None = None) -> None:
    """Pump-probe beat line, frequency axis relative to the line center."""
    center = spectrum.freqs[np.argmax(spectrum.power_db)]
    offset = spectrum.freqs - center
    span = spectrum.freqs[-1] - spectrum.freqs[0]
    unit, label = (1e6, "MHz") if span > 1e5 else (1.0, "Hz")
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.plot(offset / unit, spectrum.power_db, lw=1.0, color="navy")
    ax.set_xlabel(f"offset from {center / 1e9:.6f} GHz ({label})")
    ax.set_ylabel("beat power (dB re peak)")
    ax.annotate(
        f"FWHM ≈ {fwhm_hz:g} Hz",
        xy=(0.02, 0.95),
        xycoords="axes fraction",
        va="top",
        fontsize=9,
    )
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
