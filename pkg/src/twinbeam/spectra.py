"""Noise-spectrum container and its on-disk CSV format.

The CSV layout is fixed (column order is part of the interface):
``freq_hz,power_db,rbw_hz,vbw_hz,normalized`` with one row per
frequency point. Floats are written with ``repr`` so files round-trip
bit-exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

__all__ = ["NoiseSpectrum", "CSV_HEADER"]

CSV_HEADER = ["freq_hz", "power_db", "rbw_hz", "vbw_hz", "normalized"]


@dataclass(frozen=True)
class NoiseSpectrum:
    """One spectrum-analyzer trace.

    ``power_db`` is absolute when ``normalized`` is False, otherwise dB
    relative to the shot-noise limit. A normalized trace keeps the SNL
    it was divided by in ``snl_reference`` (absolute dB, same grid).
    """

    freqs: np.ndarray
    power_db: np.ndarray
    rbw: float
    vbw: float
    normalized: bool = False
    snl_reference: np.ndarray | None = None

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        power = np.asarray(self.power_db, dtype=float)
        if freqs.ndim != 1 or freqs.size < 2:
            raise ValueError("freqs must be a 1-d grid with at least 2 points")
        if power.shape != freqs.shape:
            raise ValueError("power_db must match the frequency grid")
        if not np.all(np.diff(freqs) > 0):
            raise ValueError("freqs must be strictly increasing")
        spacing = float(np.min(np.diff(freqs)))
        if self.rbw < spacing * (1.0 - 1e-9):
            raise ValueError(
                f"rbw {self.rbw} Hz below grid spacing {spacing} Hz"
            )
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "power_db", power)
        if self.snl_reference is not None:
            snl = np.asarray(self.snl_reference, dtype=float)
            if snl.shape != freqs.shape:
                raise ValueError("snl_reference must match the frequency grid")
            object.__setattr__(self, "snl_reference", snl)

    @property
    def power_linear(self) -> np.ndarray:
        return 10.0 ** (self.power_db / 10.0)

    def normalize(self, snl: "NoiseSpectrum") -> "NoiseSpectrum":
        """Divide by an SNL trace on the same grid; result is in dB re SNL."""
        if self.normalized:
            raise ValueError("trace is already normalized")
        if snl.normalized:
            raise ValueError("SNL reference must be an absolute trace")
        if not np.array_equal(snl.freqs, self.freqs):
            raise ValueError("SNL grid does not match")
        return replace(
            self,
            power_db=self.power_db - snl.power_db,
            normalized=True,
            snl_reference=snl.power_db.copy(),
        )

    def band(self, f_lo: float, f_hi: float) -> "NoiseSpectrum":
        """Restrict to [f_lo, f_hi]; errors if the band leaves the grid."""
        if f_lo < self.freqs[0] or f_hi > self.freqs[-1]:
            raise ValueError(
                f"band [{f_lo:g}, {f_hi:g}] Hz outside grid "
                f"[{self.freqs[0]:g}, {self.freqs[-1]:g}] Hz"
            )
        sel = (self.freqs >= f_lo) & (self.freqs <= f_hi)
        if np.count_nonzero(sel) < 2:
            raise ValueError("band contains fewer than 2 grid points")
        snl = self.snl_reference[sel] if self.snl_reference is not None else None
        return replace(
            self,
            freqs=self.freqs[sel],
            power_db=self.power_db[sel],
            snl_reference=snl,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            flag = "1" if self.normalized else "0"
            for f, p in zip(self.freqs, self.power_db):
                writer.writerow([repr(float(f)), repr(float(p)),
                                 repr(float(self.rbw)), repr(float(self.vbw)), flag])

    @classmethod
    def from_csv(cls, path) -> "NoiseSpectrum":
        freqs, power = [], []
        rbw = vbw = None
        normalized = False
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {header!r}")
            for row in reader:
                freqs.append(float(row[0]))
                power.append(float(row[1]))
                rbw = float(row[2])
                vbw = float(row[3])
                normalized = row[4] == "1"
        if rbw is None:
            raise ValueError(f"{path}: no data rows")
        return cls(
            freqs=np.array(freqs),
            power_db=np.array(power),
            rbw=rbw,
            vbw=vbw,
            normalized=normalized,
        )
