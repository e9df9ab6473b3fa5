"""Phenomenological model of the hot-Cs four-wave-mixing cell.

The cell is summarized by a gain law, an absorption budget and an
excess-noise term, all driven by pump power, one- and two-photon
detuning and cell temperature:

    G = 1 + g0 * (P/P_ref) * (n(T)/n(T_ref)) * L(delta) * D(Delta) * geometry

``L`` is a skewed two-photon response, strictly decreasing across the
measured detuning window (gain keeps rising toward negative detuning
until far outside it), ``D`` is the far-detuned nonlinearity falloff,
and ``n(T)`` the vapor number density. Coefficients are not derived
from atomic structure; they are calibration data shipped in a config
file and fitted against the measured squeezing anchors.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import constants
from .noise_core import TwinBeamModel, lossy_noise_ratio

__all__ = [
    "MediumParams",
    "MediumResponse",
    "MediumCalibration",
    "LossBudget",
    "SweepResult",
    "vapor_density",
    "respond",
    "composed_noise",
    "squeezing_vs",
    "SWEEP_AXES",
]

TEMPERATURE_WINDOW_C = (90.0, 125.0)
DETUNING_WINDOW_HZ = (0.2e9, 20e9)

CALIBRATION_SCHEMA_ID = "twinbeam-medium-cal-1"


@dataclass(frozen=True)
class MediumParams:
    """Operating point of the vapor cell."""

    pump_power: float = constants.PUMP_POWER_W
    delta_one: float = constants.DELTA_ONE_HZ
    delta_two: float = constants.DELTA_TWO_HZ
    temperature: float = constants.CELL_TEMPERATURE_C
    cell_length: float = constants.CELL_LENGTH_M
    crossing_angle: float = constants.CROSSING_ANGLE_RAD
    pump_waist: float = constants.PUMP_WAIST_M
    probe_waist: float = constants.PROBE_WAIST_M

    def __post_init__(self):
        if not self.pump_power > 0.0:
            raise ValueError(f"pump_power must be > 0, got {self.pump_power}")
        lo, hi = TEMPERATURE_WINDOW_C
        if not lo <= self.temperature <= hi:
            raise ValueError(
                f"temperature {self.temperature} C outside model window [{lo}, {hi}]"
            )
        lo, hi = DETUNING_WINDOW_HZ
        if not lo <= self.delta_one <= hi:
            raise ValueError(
                f"delta_one {self.delta_one} Hz outside model window [{lo:g}, {hi:g}]"
            )
        if not self.cell_length > 0.0:
            raise ValueError(f"cell_length must be > 0, got {self.cell_length}")
        for name in ("pump_waist", "probe_waist"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class MediumResponse:
    """Cell output summary: gain, per-arm cell transmissions, excess noise."""

    gain: float
    eta_cell_probe: float
    eta_cell_conj: float
    excess_noise: float

    def __post_init__(self):
        if not (math.isfinite(self.gain) and self.gain >= 1.0):
            raise ValueError(f"gain must be finite and >= 1, got {self.gain}")
        for name in ("eta_cell_probe", "eta_cell_conj"):
            eta = getattr(self, name)
            if not 0.0 < eta <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {eta}")
        if not (math.isfinite(self.excess_noise) and self.excess_noise >= 0.0):
            raise ValueError(f"excess_noise must be >= 0, got {self.excess_noise}")


@dataclass(frozen=True)
class MediumCalibration:
    """Fit coefficients of the phenomenological cell model.

    ``g0`` scales the gain; ``gamma_2``/``delta_asym`` set the width and
    skew of the two-photon response; ``abs_strength``/``abs_width`` the
    resonant absorption; the ``xs_*`` pairs the excess-noise growth at
    negative two-photon detuning and above the reference temperature.
    """

    g0: float
    gamma_2_hz: float
    delta_asym_per_hz: float
    abs_strength: float
    abs_width_hz: float
    xs_delta_amp: float
    xs_delta_scale_hz: float
    xs_t_amp: float
    xs_t_scale_c: float
    pump_ref_w: float = constants.PUMP_POWER_W
    temp_ref_c: float = constants.CELL_TEMPERATURE_C
    detuning_ref_hz: float = constants.DELTA_ONE_HZ
    detuning_exponent: float = 2.0

    def __post_init__(self):
        positive = (
            "g0",
            "gamma_2_hz",
            "abs_strength",
            "abs_width_hz",
            "xs_delta_scale_hz",
            "xs_t_scale_c",
            "pump_ref_w",
            "detuning_ref_hz",
            "detuning_exponent",
        )
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("delta_asym_per_hz", "xs_delta_amp", "xs_t_amp"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    def to_file(self, path) -> None:
        cp = configparser.ConfigParser()
        cp["calibration"] = {"schema_id": CALIBRATION_SCHEMA_ID}
        cp["coefficients"] = {
            f.name: repr(getattr(self, f.name)) for f in fields(self)
        }
        buf = io.StringIO()
        cp.write(buf)
        with open(path, "w") as fh:
            fh.write(buf.getvalue())

    @classmethod
    def from_file(cls, path) -> "MediumCalibration":
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise FileNotFoundError(f"calibration file not found: {path}")
        schema = cp.get("calibration", "schema_id", fallback=None)
        if schema != CALIBRATION_SCHEMA_ID:
            raise ValueError(
                f"{path}: unsupported calibration schema {schema!r}, "
                f"expected {CALIBRATION_SCHEMA_ID!r}"
            )
        kwargs = {}
        for f in fields(cls):
            if cp.has_option("coefficients", f.name):
                kwargs[f.name] = float(cp.get("coefficients", f.name))
        return cls(**kwargs)


@dataclass(frozen=True)
class LossBudget:
    """Per-arm transmissions downstream of the cell exit window."""

    polarizer_transmission: float = constants.POLARIZER_TRANSMISSION
    detector_qe: float = constants.DETECTOR_QE
    window_transmission: float = constants.WINDOW_TRANSMISSION

    def __post_init__(self):
        for name in ("polarizer_transmission", "detector_qe", "window_transmission"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")

    @property
    def downstream(self) -> float:
        return self.polarizer_transmission * self.detector_qe

    def arm_transmissions(self, response: MediumResponse) -> tuple[float, float]:
        return (
            response.eta_cell_probe * self.downstream,
            response.eta_cell_conj * self.downstream,
        )


# Structural constants of the shipped model (response widths, skew,
# absorption). The amplitudes g0 / xs_delta_amp / xs_t_amp are the free
# coefficients the calibration fit adjusts; their values here are only
# the fit's deterministic starting point.
DEFAULT_CALIBRATION_START = MediumCalibration(
    g0=3.3,
    gamma_2_hz=60e6,
    delta_asym_per_hz=1.5e-8,
    abs_strength=0.76,
    abs_width_hz=0.4e9,
    xs_delta_amp=0.005,
    xs_delta_scale_hz=15e6,
    xs_t_amp=0.002,
    xs_t_scale_c=1.5,
)


def vapor_density(temperature_c: float) -> float:
    """Cs number density in atoms/m^3 from the liquid-phase vapor pressure.

    Alcock-type correlation, pressure in atmospheres:
    log10 p = 8.232 - 4062/T - 1.3359 log10 T (T in kelvin), converted
    with the ideal-gas law. Valid over the model temperature window.
    """
    lo, hi = TEMPERATURE_WINDOW_C
    if not lo <= temperature_c <= hi:
        raise ValueError(
            f"temperature {temperature_c} C outside model window [{lo}, {hi}]"
        )
    t_k = temperature_c + 273.15
    log10_p_atm = 8.232 - 4062.0 / t_k - 1.3359 * math.log10(t_k)
    pressure_pa = 101325.0 * 10.0**log10_p_atm
    return pressure_pa / (constants.K_BOLTZMANN * t_k)


def _two_photon_response(delta_two: float, cal: MediumCalibration) -> float:
    """Skewed resonance L(delta), normalized to L(0) = 1.

    Strictly decreasing while delta > -delta_asym * gamma_2^2, which the
    shipped calibration keeps outside the measured window.
    """
    x = delta_two / cal.gamma_2_hz
    return math.exp(-0.5 * x * x - cal.delta_asym_per_hz * delta_two)


def _detuning_falloff(delta_one: float, cal: MediumCalibration) -> float:
    return (cal.detuning_ref_hz / delta_one) ** cal.detuning_exponent


def _absorption(params: MediumParams, cal: MediumCalibration, n_rel: float) -> float:
    lorentz = 1.0 / (1.0 + (params.delta_one / cal.abs_width_hz) ** 2)
    length = params.cell_length / constants.CELL_LENGTH_M
    return cal.abs_strength * n_rel * lorentz * length


def respond(
    params: MediumParams,
    cal: MediumCalibration,
    window_transmission: float = constants.WINDOW_TRANSMISSION,
) -> MediumResponse:
    """Evaluate the cell model at one operating point.

    ``eta_cell_*`` contain the exit-window transmission and the vapor
    absorption; losses before the amplifier act on the seed alone and
    are excluded. Absorption is applied symmetrically to both arms.
    """
    n_rel = vapor_density(params.temperature) / vapor_density(cal.temp_ref_c)
    geometry = (
        (params.cell_length / constants.CELL_LENGTH_M)
        * (constants.PUMP_WAIST_M / params.pump_waist) ** 2
    )
    gain = 1.0 + (
        cal.g0
        * (params.pump_power / cal.pump_ref_w)
        * n_rel
        * _two_photon_response(params.delta_two, cal)
        * _detuning_falloff(params.delta_one, cal)
        * geometry
    )
    eta_cell = window_transmission * math.exp(-_absorption(params, cal, n_rel))
    excess = (gain - 1.0) * (
        cal.xs_delta_amp * math.exp(-params.delta_two / cal.xs_delta_scale_hz)
        + cal.xs_t_amp * math.exp((params.temperature - cal.temp_ref_c) / cal.xs_t_scale_c)
    )
    return MediumResponse(
        gain=gain,
        eta_cell_probe=eta_cell,
        eta_cell_conj=eta_cell,
        excess_noise=excess,
    )


def composed_noise(
    params: MediumParams,
    cal: MediumCalibration,
    budget: LossBudget | None = None,
    seed_power: float = constants.SEED_POWER_W,
) -> tuple[MediumResponse, TwinBeamModel, float]:
    """Cell response, twin-beam model and SNL-normalized noise (linear).

    The noise is the lossy difference-noise ratio plus the cell's
    excess-noise term; it is the quantity the sweep figures report.
    """
    if budget is None:
        budget = LossBudget()
    response = respond(params, cal, window_transmission=budget.window_transmission)
    eta_p, eta_c = budget.arm_transmissions(response)
    model = TwinBeamModel(
        gain=response.gain,
        seed_power=seed_power,
        eta_probe=eta_p,
        eta_conj=eta_c,
    )
    noise = lossy_noise_ratio(model).linear + response.excess_noise
    return response, model, noise


SWEEP_AXES = {
    "pump": "pump_power",
    "delta1": "delta_one",
    "delta2": "delta_two",
    "temperature": "temperature",
}


@dataclass(frozen=True)
class SweepResult:
    """Paired gain / squeezing arrays over one parameter axis."""

    axis: str
    values: np.ndarray
    gains: np.ndarray
    squeezing_db: np.ndarray
    field_name: str = field(default="", compare=False)


def squeezing_vs(
    axis: str,
    values,
    cal: MediumCalibration,
    budget: LossBudget | None = None,
    base_params: MediumParams | None = None,
) -> SweepResult:
    """Sweep one axis, others held at the base operating point.

    ``axis`` is one of ``pump``, ``delta1``, ``delta2``, ``temperature``.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(
            f"unknown sweep axis {axis!r}; valid axes: {', '.join(sorted(SWEEP_AXES))}"
        )
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("sweep grid is empty")
    if base_params is None:
        base_params = MediumParams()
    field_name = SWEEP_AXES[axis]
    gains = np.empty(values.size)
    squeezing = np.empty(values.size)
    for i, v in enumerate(values):
        params = replace(base_params, **{field_name: float(v)})
        response, _, noise = composed_noise(params, cal, budget)
        gains[i] = response.gain
        squeezing[i] = 10.0 * math.log10(noise)
    return SweepResult(
        axis=axis,
        values=values,
        gains=gains,
        squeezing_db=squeezing,
        field_name=field_name,
    )
