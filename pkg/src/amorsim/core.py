"""Physical conversions shared across the simulator.

Unit conventions: magnetic fields in gauss, gyromagnetic ratios in Hz/G,
frequencies in Hz at the configuration surface (angular rad/s only inside the
dynamics kernels), temperatures in deg C, number densities in cm^-3.
"""
from __future__ import annotations

import math

TOOL_VERSION = "0.1.0"           # keep in sync with pyproject

PLANCK_H = 6.62607015e-34        # J s
SPEED_OF_LIGHT = 2.99792458e8    # m/s
BOLTZMANN_K = 1.380649e-23       # J/K

# gyromagnetic ratios, Hz per gauss
GAMMA_DEFAULT_HZ_PER_G = 725.0e3     # ground-state slope used by the default preset
GAMMA_RB87_F2_HZ_PER_G = 699.58e3    # textbook 87Rb F=2 value

# saturated Rb vapor correlation log10(p/Torr) = A - B/T(K), liquid branch,
# rescaled so the density at the anchor temperature is exact
_VAPOR_A = 2.881 + 4.312
_VAPOR_B = 4040.0
_TORR_TO_PA = 133.322387415
DENSITY_ANCHOR_TEMP_C = 40.3
DENSITY_ANCHOR_CM3 = 5.5e10
DENSITY_DOMAIN_C = (20.0, 120.0)

GAUSS_TO_PT = 1.0e8              # 1 G = 1e-4 T = 1e8 pT


class AmorsimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(AmorsimError):
    """Invalid configuration; carries (field_path, message) pairs."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [("", errors)]
        self.errors = list(errors)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.errors]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class DataError(AmorsimError):
    """Mismatched or insufficient input data."""


class NumericError(AmorsimError):
    """Numerical failure during integration or estimation."""


def larmor_frequency(bias_bz: float, gamma: float) -> float:
    """Larmor frequency gamma*|Bz| in Hz for a field in gauss, gamma in Hz/G."""
    return gamma * abs(bias_bz)


def _raw_vapor_density_cm3(temperature_c: float) -> float:
    t_k = temperature_c + 273.15
    p_pa = 10.0 ** (_VAPOR_A - _VAPOR_B / t_k) * _TORR_TO_PA
    return p_pa / (BOLTZMANN_K * t_k) * 1e-6


_DENSITY_SCALE = DENSITY_ANCHOR_CM3 / _raw_vapor_density_cm3(DENSITY_ANCHOR_TEMP_C)


def rb_number_density(temperature_c: float) -> float:
    """Rb vapor number density in cm^-3 on the supported 20-120 degC range.

    A single-branch saturated-vapor correlation, strictly increasing in
    temperature, rescaled so rb_number_density(40.3) = 5.5e10 exactly.
    """
    lo, hi = DENSITY_DOMAIN_C
    if not (lo <= temperature_c <= hi):
        raise ConfigError([("cell.temperature",
                            f"temperature {temperature_c} degC outside supported "
                            f"range [{lo}, {hi}]")])
    return _DENSITY_SCALE * _raw_vapor_density_cm3(temperature_c)


def db_to_variance(db: float) -> float:
    """Quadrature variance relative to vacuum for a level in dB: 10**(dB/10)."""
    return 10.0 ** (db / 10.0)


def variance_to_db(variance: float) -> float:
    if variance <= 0.0:
        raise ValueError(f"variance must be positive, got {variance}")
    return 10.0 * math.log10(variance)


def photon_flux(power_w: float, wavelength_m: float) -> float:
    """Photons per second for an optical beam of the given power."""
    return power_w * wavelength_m / (PLANCK_H * SPEED_OF_LIGHT)


def shot_noise_asd(power_w: float, wavelength_m: float) -> float:
    """Polarimeter rotation-angle shot noise, rad/sqrt(Hz), 1/(2*sqrt(flux))."""
    return 1.0 / (2.0 * math.sqrt(photon_flux(power_w, wavelength_m)))
