"""Unit conventions used throughout the package.

All user-facing energies and frequencies are wavenumbers (cm^-1), all
times are femtoseconds.  hbar = 1 is realised by a single conversion
constant: a wavenumber becomes an angular frequency (rad/fs) through
multiplication by 2*pi*c with c in cm/fs.  The conversion is applied at
module boundaries (phases, decay rates); stored model parameters stay
in cm^-1.

Keep only primitive constants and pure functions here; this module is
imported from every layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# CODATA 2018 defining constants (exact by definition).
_BOLTZMANN_J_PER_K = 1.380649e-23
_PLANCK_J_S = 6.62607015e-34
_C_CM_PER_S = 2.99792458e10

#: Speed of light in cm/fs (2.99792458e-5).
SPEED_OF_LIGHT_CM_PER_FS = _C_CM_PER_S * 1e-15

#: k_B/(h c): thermal energy per kelvin expressed as a wavenumber,
#: 0.695034800... cm^-1/K.
KB_WAVENUMBER_PER_KELVIN = _BOLTZMANN_J_PER_K / (_PLANCK_J_S * _C_CM_PER_S)

#: rad/fs carried by one cm^-1 (= 2*pi*c with c in cm/fs).
ANGULAR_PER_WAVENUMBER = 2.0 * math.pi * SPEED_OF_LIGHT_CM_PER_FS


@dataclass(frozen=True)
class PhysicalConstants:
    kB_wavenumber_per_kelvin: float = KB_WAVENUMBER_PER_KELVIN
    speed_of_light_cm_per_fs: float = SPEED_OF_LIGHT_CM_PER_FS
    angular_conversion: float = ANGULAR_PER_WAVENUMBER

    def __post_init__(self):
        if not (self.kB_wavenumber_per_kelvin > 0
                and self.speed_of_light_cm_per_fs > 0
                and self.angular_conversion > 0):
            raise DomainError("physical constants must be strictly positive")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class Thermodynamics:
    """Temperature bundle.

    beta_hbar is in fs: beta*hbar*omega is dimensionless when omega is
    in rad/fs.  kT_wavenumber is the same thermal energy in cm^-1, so
    the dimensionless combination beta*hbar*omega equals
    omega[cm^-1]/kT_wavenumber.
    """

    temperature: float   # K
    kT_wavenumber: float # cm^-1
    beta_hbar: float     # fs


def beta_from_temperature(temperature: float) -> Thermodynamics:
    """Build the thermodynamic record for a bath temperature in kelvin."""
    if not isinstance(temperature, (int, float)) or not math.isfinite(temperature):
        raise DomainError(f"temperature must be finite, got {temperature!r}")
    if temperature <= 0.0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    kT = KB_WAVENUMBER_PER_KELVIN * temperature
    return Thermodynamics(
        temperature=float(temperature),
        kT_wavenumber=kT,
        beta_hbar=1.0 / (kT * ANGULAR_PER_WAVENUMBER),
    )


def wavenumber_to_angular(nu):
    """cm^-1 -> rad/fs.  Linear and sign-preserving; accepts arrays."""
    _require_finite(nu)
    return nu * ANGULAR_PER_WAVENUMBER


def angular_to_wavenumber(omega):
    """rad/fs -> cm^-1, inverse of :func:`wavenumber_to_angular`."""
    _require_finite(omega)
    return omega / ANGULAR_PER_WAVENUMBER


def _require_finite(x):
    import numpy as np

    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite frequency value")
