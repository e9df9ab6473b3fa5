"""Squeezing extraction from spectra and noise-vs-power scans.

The slope method: intensity-difference noise power grows linearly with
total optical power for both twin beams and a coherent reference, so
the ratio of fitted slopes is the squeezing in linear units, free of
any static offset the background subtraction left behind.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .spectra import NoiseSpectrum

__all__ = [
    "PowerScanPoint",
    "LineFit",
    "SqueezingBandwidth",
    "fit_noise_vs_power",
    "slope_ratio_to_db",
    "max_squeezing",
    "squeezing_bandwidth",
    "write_power_scan_csv",
    "read_power_scan_csv",
]

SCAN_CSV_HEADER = ["power_w", "noise_linear", "sigma"]


@dataclass(frozen=True)
class PowerScanPoint:
    """One noise measurement at one total optical power."""

    total_power: float
    noise_power: float
    std_dev: float = 0.0

    def __post_init__(self):
        if not self.total_power > 0.0:
            raise ValueError("total_power must be > 0")
        if not self.noise_power > 0.0:
            raise ValueError("noise_power must be > 0")
        if self.std_dev < 0.0:
            raise ValueError("std_dev must be >= 0")


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_stderr: float

    def __post_init__(self):
        for name in ("slope", "intercept", "slope_stderr"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} is not finite")
        if self.slope_stderr < 0.0:
            raise ValueError("slope_stderr must be >= 0")


def fit_noise_vs_power(points: list[PowerScanPoint]) -> LineFit:
    """Straight-line fit of noise power versus total optical power.

    Weighted least squares with weights 1/sigma^2 when every point
    carries an uncertainty; unweighted otherwise. The intercept is kept
    free to absorb residual background. Weighted fits propagate the
    stated sigmas into the slope error; unweighted fits estimate it
    from the residuals.
    """
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    x = np.array([p.total_power for p in points])
    y = np.array([p.noise_power for p in points])
    sig = np.array([p.std_dev for p in points])
    if np.unique(x).size < 2:
        raise ValueError("degenerate scan: all powers identical")

    weighted = bool(np.all(sig > 0.0))
    w = 1.0 / sig**2 if weighted else np.ones_like(x)
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    if sxx <= 0.0:
        raise ValueError("degenerate scan: no spread in power")
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    intercept = ybar - slope * xbar
    if weighted:
        slope_var = 1.0 / sxx
    else:
        resid = y - (intercept + slope * x)
        dof = len(points) - 2
        slope_var = (resid**2).sum() / dof / sxx
    return LineFit(
        slope=float(slope),
        intercept=float(intercept),
        slope_stderr=float(math.sqrt(slope_var)),
    )


def slope_ratio_to_db(twin_fit: LineFit, snl_fit: LineFit) -> float:
    """Squeezing from the ratio of twin-beam to coherent-reference slopes."""
    if snl_fit.slope <= 0.0:
        raise ValueError(f"SNL slope must be > 0, got {snl_fit.slope}")
    if twin_fit.slope <= 0.0:
        raise ValueError(f"twin-beam slope must be > 0, got {twin_fit.slope}")
    return 10.0 * math.log10(twin_fit.slope / snl_fit.slope)


def max_squeezing(
    spectrum: NoiseSpectrum,
    band: tuple[float, float],
) -> tuple[float, float]:
    """Frequency and depth (dB) of the strongest noise reduction in a band."""
    if not spectrum.normalized:
        raise ValueError("max_squeezing needs an SNL-normalized spectrum")
    sub = spectrum.band(*band)
    i = int(np.argmin(sub.power_db))
    return float(sub.freqs[i]), float(sub.power_db[i])


@dataclass(frozen=True)
class SqueezingBandwidth:
    """Width of the contiguous sub-SNL interval around the minimum."""

    width_hz: float
    exceeds_span: bool
    any_squeezing: bool


def squeezing_bandwidth(
    spectrum: NoiseSpectrum,
    threshold_db: float = 0.0,
) -> SqueezingBandwidth:
    """Contiguous below-threshold interval containing the trace minimum.

    Edges between grid points are taken at bin midpoints; an interval
    running into either span edge is flagged ``exceeds_span``. A trace
    that never dips below the threshold reports zero width with
    ``any_squeezing`` False rather than an error.
    """
    if not spectrum.normalized:
        raise ValueError("squeezing_bandwidth needs an SNL-normalized spectrum")
    below = spectrum.power_db < threshold_db
    if not np.any(below):
        return SqueezingBandwidth(0.0, exceeds_span=False, any_squeezing=False)
    i_min = int(np.argmin(spectrum.power_db))
    if not below[i_min]:
        return SqueezingBandwidth(0.0, exceeds_span=False, any_squeezing=False)
    lo = i_min
    while lo > 0 and below[lo - 1]:
        lo -= 1
    hi = i_min
    while hi < below.size - 1 and below[hi + 1]:
        hi += 1
    freqs = spectrum.freqs
    exceeds = hi == below.size - 1
    f_lo = freqs[0] if lo == 0 else 0.5 * (freqs[lo - 1] + freqs[lo])
    f_hi = freqs[-1] if exceeds else 0.5 * (freqs[hi] + freqs[hi + 1])
    return SqueezingBandwidth(
        width_hz=float(f_hi - f_lo),
        exceeds_span=exceeds,
        any_squeezing=True,
    )


def write_power_scan_csv(path, points: list[PowerScanPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCAN_CSV_HEADER)
        for p in points:
            writer.writerow(
                [repr(float(p.total_power)), repr(float(p.noise_power)),
                 repr(float(p.std_dev))]
            )


def read_power_scan_csv(path) -> list[PowerScanPoint]:
    points = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SCAN_CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for row in reader:
            points.append(
                PowerScanPoint(
                    total_power=float(row[0]),
                    noise_power=float(row[1]),
                    std_dev=float(row[2]),
                )
            )
    return points
