"""Quantum-noise algebra for a seeded phase-insensitive twin-beam amplifier.

A bright probe seed of photon flux ``n0`` enters an amplifier of gain
``G``; the probe leaves with flux ``G*n0`` and a conjugate is created
with flux ``(G-1)*n0``. In the linearized (bright-seed) regime the
amplitude-quadrature fluctuations of the two output beams are jointly
Gaussian with

    Var(X_p) = Var(X_c) = 2G - 1,      Cov(X_p, X_c) = 2*sqrt(G*(G-1)),

in shot-noise units, so the photon-number difference variance equals
``n0`` exactly and sits a factor 1/(2G-1) below the shot-noise limit of
the total detected flux. Losses are independent beamsplitters on each
arm and never fold into ``G``.

All dB values are 10*log10 of variance (power) ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TwinBeamModel",
    "NoiseRatio",
    "ideal_output_powers",
    "ideal_noise_ratio",
    "lossy_noise_ratio",
    "uncorrelated_noise_ratio",
    "mc_noise_ratio",
]


@dataclass(frozen=True)
class TwinBeamModel:
    """Twin-beam amplifier with per-arm transmission budgets.

    ``eta_probe`` / ``eta_conj`` collect every loss downstream of the
    amplifier on that arm, detector quantum efficiency included.
    """

    gain: float
    seed_power: float
    eta_probe: float = 1.0
    eta_conj: float = 1.0

    def __post_init__(self):
        if not self.gain >= 1.0:
            raise ValueError(f"gain must be >= 1, got {self.gain}")
        if not self.seed_power > 0.0:
            raise ValueError(f"seed_power must be > 0, got {self.seed_power}")
        for name in ("eta_probe", "eta_conj"):
            eta = getattr(self, name)
            if not 0.0 <= eta <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {eta}")

    @property
    def detected_powers(self) -> tuple[float, float]:
        """Mean detected (probe, conjugate) powers after the loss budget."""
        probe, conj = ideal_output_powers(self.seed_power, self.gain)
        return self.eta_probe * probe, self.eta_conj * conj

    @property
    def detected_total(self) -> float:
        p, c = self.detected_powers
        return p + c


@dataclass(frozen=True)
class NoiseRatio:
    """Variance of the detected intensity difference relative to the SNL."""

    linear: float
    db: float

    @classmethod
    def from_linear(cls, linear: float) -> "NoiseRatio":
        if not linear > 0.0:
            raise ValueError(f"noise ratio must be > 0, got {linear}")
        return cls(linear=linear, db=10.0 * math.log10(linear))


def ideal_output_powers(seed_power: float, gain: float) -> tuple[float, float]:
    """Mean output powers (probe, conjugate) of the lossless amplifier.

    The probe-conjugate difference is conserved and equals the seed.
    """
    if not gain >= 1.0:
        raise ValueError(f"gain must be >= 1, got {gain}")
    if not seed_power > 0.0:
        raise ValueError(f"seed_power must be > 0, got {seed_power}")
    return gain * seed_power, (gain - 1.0) * seed_power


def ideal_noise_ratio(gain: float) -> NoiseRatio:
    """Lossless intensity-difference noise relative to the SNL: 1/(2G-1)."""
    if not gain >= 1.0:
        raise ValueError(f"gain must be >= 1, got {gain}")
    return NoiseRatio.from_linear(1.0 / (2.0 * gain - 1.0))


def _difference_moments(model: TwinBeamModel) -> tuple[float, float, float, float]:
    """Per-unit-seed detected variances, covariance and mean total flux.

    Bernoulli thinning by a beamsplitter of transmission eta maps
    Var(N) -> eta^2 Var(N) + eta (1 - eta) <N> and Cov -> eta_p eta_c Cov.
    """
    g = model.gain
    ep, ec = model.eta_probe, model.eta_conj
    var_p = ep**2 * g * (2 * g - 1) + ep * (1 - ep) * g
    var_c = ec**2 * (g - 1) * (2 * g - 1) + ec * (1 - ec) * (g - 1)
    cov = 2.0 * ep * ec * g * (g - 1)
    snl = ep * g + ec * (g - 1)
    return var_p, var_c, cov, snl


def lossy_noise_ratio(model: TwinBeamModel) -> NoiseRatio:
    """Intensity-difference noise ratio with independent per-arm losses.

    For eta_probe == eta_conj == eta this closes to (1-eta) + eta/(2G-1).
    """
    var_p, var_c, cov, snl = _difference_moments(model)
    if snl <= 0.0:
        raise ValueError(
            "no detected light: G = 1 with eta_probe = 0 leaves nothing to measure"
        )
    return NoiseRatio.from_linear((var_p + var_c - 2.0 * cov) / snl)


def uncorrelated_noise_ratio(model: TwinBeamModel) -> NoiseRatio:
    """Difference-noise ratio if the arm correlation were fully lost.

    Ceiling for partially decorrelated detection: the individual beams
    keep their amplified noise but the cross term no longer cancels.
    """
    var_p, var_c, _, snl = _difference_moments(model)
    if snl <= 0.0:
        raise ValueError(
            "no detected light: G = 1 with eta_probe = 0 leaves nothing to measure"
        )
    return NoiseRatio.from_linear((var_p + var_c) / snl)


def mc_noise_ratio(
    model: TwinBeamModel,
    n_samples: int = 10**6,
    rng_seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo estimate of the detected noise ratio with standard error.

    Samples the linearized photon-number fluctuations directly: draws
    correlated amplifier quadratures, scales them by sqrt of the mean
    photon numbers, adds Gaussian-limit binomial loss noise per arm, and
    returns the sample variance of the difference over the detected-flux
    SNL. Independent of :func:`lossy_noise_ratio`; the two must agree
    within statistics.
    """
    if n_samples < 10**4:
        raise ValueError(f"n_samples must be >= 1e4, got {n_samples}")
    g = model.gain
    ep, ec = model.eta_probe, model.eta_conj
    n_probe = g                 # per unit seed flux
    n_conj = g - 1.0
    snl = ep * n_probe + ec * n_conj
    if snl <= 0.0:
        raise ValueError(
            "no detected light: G = 1 with eta_probe = 0 leaves nothing to measure"
        )

    rng = np.random.default_rng(rng_seed)
    var_x = 2.0 * g - 1.0
    cov_x = 2.0 * math.sqrt(g * (g - 1.0))
    # Correlated quadratures via Cholesky of [[v, c], [c, v]].
    a = math.sqrt(var_x)
    b = cov_x / a
    c = math.sqrt(max(var_x - b**2, 0.0))
    z1 = rng.standard_normal(n_samples)
    z2 = rng.standard_normal(n_samples)
    x_p = a * z1
    x_c = b * z1 + c * z2

    dn_p = math.sqrt(n_probe) * x_p
    dn_c = math.sqrt(n_conj) * x_c if n_conj > 0.0 else np.zeros(n_samples)

    # Loss: transmitted fluctuation plus binomial partition noise.
    dn_p = ep * dn_p + math.sqrt(ep * (1.0 - ep) * n_probe) * rng.standard_normal(n_samples)
    if n_conj > 0.0:
        dn_c = ec * dn_c + math.sqrt(ec * (1.0 - ec) * n_conj) * rng.standard_normal(n_samples)

    diff = dn_p - dn_c
    sample_var = float(np.var(diff, ddof=1))
    estimate = sample_var / snl
    stderr = estimate * math.sqrt(2.0 / (n_samples - 1))
    return estimate, stderr
