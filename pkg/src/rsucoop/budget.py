"""Radar link budget and noise/clutter levels.

Amplitudes are in volts across 1 ohm, so a power in watts is the square of
an amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import Boltzmann

from .errors import InputError


def dbm_to_watts(dbm):
    return 1e-3 * np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float) / 1e-3)


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def thermal_noise_power(temperature_k: float = 290.0, bandwidth_hz: float = 100e6, noise_figure_db: float = 0.0) -> float:
    """``k * T * B * F`` in watts."""
    if not (temperature_k > 0 and bandwidth_hz > 0):
        raise InputError("temperature and bandwidth must be positive")
    return float(Boltzmann * temperature_k * bandwidth_hz * db_to_linear(noise_figure_db))


@dataclass(frozen=True)
class LinkBudget:
    """Monostatic echo budget for one RSU.

    Attributes
    ----------
    pt_gt : float
        Transmit power times transmit gain (W).
    g_p : float
        Processing gain (linear).
    g_r : float
        Receive beam gain (linear).
    wavelength : float
        Meters.
    unit_radius : float
        Sensing-unit radius ``r_s`` (m).
    echo_prob : float
        Fraction ``rho`` of the unit that reflects.
    range_r_t : float
        Slant range to the target (m).
    """

    pt_gt: float
    g_p: float
    g_r: float
    wavelength: float
    unit_radius: float
    echo_prob: float
    range_r_t: float

    def __post_init__(self):
        for name in ("pt_gt", "g_p", "g_r", "wavelength", "unit_radius", "range_r_t"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InputError(f"{name} must be positive, got {v}")
        if not 0.0 <= self.echo_prob <= 1.0:
            raise InputError(f"echo_prob must lie in [0, 1], got {self.echo_prob}")

    @property
    def cross_section(self) -> float:
        return math.pi * self.unit_radius**2 * self.echo_prob


def echo_amplitude(link: LinkBudget) -> float:
    """Received echo amplitude from the radar equation."""
    power = (
        link.pt_gt * link.g_r * link.g_p * link.wavelength**2 * link.cross_section
        / ((4 * math.pi) ** 3 * link.range_r_t**4)
    )
    return math.sqrt(power)


def receive_gain(delta_theta_deg: float, delta_phi_deg: float) -> float:
    """Beam gain approximation ``26000 / (dtheta * dphi)`` with widths in degrees."""
    if not (delta_theta_deg > 0 and delta_phi_deg > 0):
        raise InputError("beamwidths must be positive")
    return 26000.0 / (delta_theta_deg * delta_phi_deg)


@dataclass(frozen=True)
class NoiseClutterParams:
    """Gaussian noise std ``sigma_n`` and Rayleigh clutter scale ``sigma_i`` (volts).

    ``P_n = sigma_n**2`` and ``P_I = 2 * sigma_i**2``.
    """

    sigma_n: float
    sigma_i: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma_n) and self.sigma_n > 0):
            raise InputError(f"sigma_n must be positive, got {self.sigma_n}")
        if not (math.isfinite(self.sigma_i) and self.sigma_i >= 0):
            raise InputError(f"sigma_i must be non-negative, got {self.sigma_i}")

    @classmethod
    def from_powers(cls, p_n: float, p_i: float) -> "NoiseClutterParams":
        return cls(math.sqrt(p_n), math.sqrt(p_i / 2))

    @classmethod
    def from_dbm(cls, p_n_dbm: float, p_i_dbm: float | None) -> "NoiseClutterParams":
        p_i = 0.0 if p_i_dbm is None else float(dbm_to_watts(p_i_dbm))
        return cls.from_powers(float(dbm_to_watts(p_n_dbm)), p_i)

    @classmethod
    def from_thermal(
        cls,
        p_i_dbm: float | None,
        temperature_k: float = 290.0,
        bandwidth_hz: float = 100e6,
        noise_figure_db: float = 6.0,
    ) -> "NoiseClutterParams":
        p_i = 0.0 if p_i_dbm is None else float(dbm_to_watts(p_i_dbm))
        return cls.from_powers(thermal_noise_power(temperature_k, bandwidth_hz, noise_figure_db), p_i)

    @property
    def p_n(self) -> float:
        return self.sigma_n**2

    @property
    def p_i(self) -> float:
        return 2 * self.sigma_i**2
