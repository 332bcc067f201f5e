"""Spectral densities and their exponential (Matsubara) decompositions.

Two environments are supported:

* an overdamped Lorentz-Drude bath, J(w) = 2*eta*w*Lambda/(w^2+Lambda^2),
  decomposed into a Drude pole plus K thermal (Matsubara) poles, with a
  Markovian closure for the poles beyond K;
* an undamped oscillator bath, a delta-function spectral density at
  +/- w_uo handled analytically through the sifting property, which
  contributes exactly two purely imaginary exponents.

Every exponential term carries the coefficient pair (e, e_bar):
the total correlation function is L(t) = sum_a e_a exp(-nu_a t) while
its conjugate L*(t) = sum_a e_bar_a exp(-nu_a t).  For real exponents
e_bar = conj(e); for the undamped pair the two coefficients swap.  The
pair is what enters the hierarchy's lowering action, so it is stored on
each mode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateTemperatureError, DomainError
from .units import ANGULAR_PER_WAVENUMBER, Thermodynamics

#: Matsubara summation hard cap for the tail closure.
TAIL_MODE_CAP = 10 ** 6


class ModeOrigin(enum.Enum):
    LD_DRUDE = "ld_drude"
    LD_MATSUBARA = "ld_matsubara"
    UO_PLUS = "uo_plus"
    UO_MINUS = "uo_minus"


@dataclass(frozen=True)
class LorentzDrudeBath:
    """Overdamped bath: coupling strength eta and Drude cutoff Lambda (cm^-1)."""

    eta: float
    lambda_cutoff: float

    def __post_init__(self):
        if self.eta < 0:
            raise DomainError(f"eta must be >= 0, got {self.eta}")
        if self.lambda_cutoff <= 0:
            raise DomainError(f"lambda_cutoff must be > 0, got {self.lambda_cutoff}")

    def spectral_density(self, omega):
        """J(w) = 2*eta*w*Lambda/(w^2 + Lambda^2), w in cm^-1."""
        return (2.0 * self.eta * self.lambda_cutoff * omega
                / (omega ** 2 + self.lambda_cutoff ** 2))


@dataclass(frozen=True)
class UndampedBath:
    """Undamped oscillator bath: reorganisation energy and frequency (cm^-1).

    The Huang-Rhys factor S = lambda_reorg/omega_uo is derived and kept
    consistent by construction.
    """

    lambda_reorg: float
    omega_uo: float
    huang_rhys: float = field(init=False)

    def __post_init__(self):
        if self.lambda_reorg < 0:
            raise DomainError(f"lambda_reorg must be >= 0, got {self.lambda_reorg}")
        if self.omega_uo <= 0:
            raise DomainError(f"omega_uo must be > 0, got {self.omega_uo}")
        object.__setattr__(self, "huang_rhys", self.lambda_reorg / self.omega_uo)


@dataclass(frozen=True)
class MatsubaraMode:
    """One exponential term of the bath correlation function.

    coefficient      e_a   (cm^-2), term of L(t)
    conj_coefficient e_bar (cm^-2), matching term of L*(t)
    frequency        nu_a  (cm^-1, complex: real part decays, imaginary
                     part oscillates)
    """

    coefficient: complex
    conj_coefficient: complex
    frequency: complex
    origin: ModeOrigin
    matsubara_index: int = 0


def decompose_ld(bath: LorentzDrudeBath, thermo: Thermodynamics, K: int,
                 convention: str = "cot") -> list[MatsubaraMode]:
    """Exponential decomposition of the Lorentz-Drude correlation function.

    Returns the Drude mode (d0, nu0 = Lambda) followed by K thermal
    modes with nu_n = 2*pi*n*kT and d_n = 4*eta*Lambda*kT*nu_n/(nu_n^2 -
    Lambda^2), all in wavenumber units.

    ``convention`` selects the trigonometric form of Re(d0):
    'cot' (default) uses cot(beta*hbar*Lambda/2); 'coth' substitutes the
    hyperbolic form found in part of the literature.  The two agree in
    the high-temperature limit.
    """
    if K < 0:
        raise DomainError(f"Matsubara count K must be >= 0, got {K}")
    if convention not in ("cot", "coth"):
        raise DomainError(f"unknown ld coefficient convention {convention!r}")
    eta, lam = bath.eta, bath.lambda_cutoff
    kT = thermo.kT_wavenumber
    x = 0.5 * lam / kT  # beta*hbar*Lambda/2, dimensionless
    if convention == "cot":
        if abs(math.sin(x)) < 1e-12:
            raise DegenerateTemperatureError(
                f"beta*hbar*Lambda/2 = {x:.6g} sits on a cot pole "
                f"(T = {thermo.temperature} K, Lambda = {lam} cm^-1)")
        re_part = 1.0 / math.tan(x)
    else:
        re_part = 1.0 / math.tanh(x)
    d0 = eta * lam * (re_part - 1j)
    modes = [MatsubaraMode(coefficient=d0, conj_coefficient=d0.conjugate(),
                           frequency=complex(lam), origin=ModeOrigin.LD_DRUDE)]
    for n in range(1, K + 1):
        nu_n = 2.0 * math.pi * n * kT
        d_n = 4.0 * eta * lam * kT * nu_n / (nu_n ** 2 - lam ** 2)
        modes.append(MatsubaraMode(coefficient=complex(d_n),
                                   conj_coefficient=complex(d_n),
                                   frequency=complex(nu_n),
                                   origin=ModeOrigin.LD_MATSUBARA,
                                   matsubara_index=n))
    return modes


def decompose_uo(bath: UndampedBath, thermo: Thermodynamics) -> list[MatsubaraMode]:
    """Exponential pair of the undamped oscillator correlation function.

    The delta-function spectral density yields exactly two terms with
    purely imaginary exponents +/- i*w_uo and real coefficients

        c1 = S*w/2 * (coth(beta*hbar*w/2) + 1)
        c2 = S*w/2 * (coth(beta*hbar*w/2) - 1)

    so that c1 + c2 = S*w*coth(..) and c1 - c2 = S*w exactly.  The
    conjugate-partner coefficient of each mode is the other mode's.
    """
    S, w = bath.huang_rhys, bath.omega_uo
    x = 0.5 * w / thermo.kT_wavenumber
    coth = 1.0 / math.tanh(x)
    c1 = 0.5 * S * w * (coth + 1.0)
    c2 = 0.5 * S * w * (coth - 1.0)
    plus = MatsubaraMode(coefficient=complex(c1), conj_coefficient=complex(c2),
                         frequency=1j * w, origin=ModeOrigin.UO_PLUS)
    minus = MatsubaraMode(coefficient=complex(c2), conj_coefficient=complex(c1),
                          frequency=-1j * w, origin=ModeOrigin.UO_MINUS)
    return [plus, minus]


def markovian_tail(bath: LorentzDrudeBath, thermo: Thermodynamics, K: int,
                   tol: float = 1e-9) -> float:
    """Markovian closure coefficient sum_{n>K} d_n/nu_n (cm^-1).

    The thermal poles beyond K decay fast enough to act as white noise;
    their aggregated weight multiplies the double commutator
    [B,[B,.]] in the equations of motion.  Summation stops once a term
    drops below ``tol`` (absolute), capped at 10^6 terms.
    """
    if tol <= 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if bath.eta == 0.0:
        return 0.0
    eta, lam = bath.eta, bath.lambda_cutoff
    kT = thermo.kT_wavenumber
    total = 0.0
    for n in range(K + 1, K + 1 + TAIL_MODE_CAP):
        nu_n = 2.0 * math.pi * n * kT
        term = 4.0 * eta * lam * kT / (nu_n ** 2 - lam ** 2)
        total += term
        if abs(term) < tol:
            return total
    raise ConvergenceError(
        f"Markovian tail did not converge below tol={tol} within "
        f"{TAIL_MODE_CAP} terms", partial_sum=total)


@dataclass(frozen=True)
class BathModel:
    """Assembled environment: ordered exponential modes plus the tail.

    Mode order is fixed as [UO+, UO-, LD Drude, LD Matsubara 1..K]; the
    hierarchy axis layout and the tier-resolved observables rely on it.
    """

    ld: Optional[LorentzDrudeBath]
    uo: Optional[UndampedBath]
    thermo: Thermodynamics
    modes: tuple[MatsubaraMode, ...]
    matsubara_count: int
    tail_coefficient: float  # cm^-1

    def __post_init__(self):
        if self.ld is None and self.uo is None:
            raise DomainError("BathModel needs at least one of ld, uo")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def coefficients(self) -> np.ndarray:
        return np.array([m.coefficient for m in self.modes], dtype=complex)

    def conj_coefficients(self) -> np.ndarray:
        return np.array([m.conj_coefficient for m in self.modes], dtype=complex)

    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes], dtype=complex)

    def axis_origins(self) -> tuple[ModeOrigin, ...]:
        return tuple(m.origin for m in self.modes)

    def canonical_text(self) -> str:
        """Stable textual identity used for checkpoint hashing."""
        rows = [f"{m.origin.value} {m.matsubara_index} "
                f"{m.coefficient.real:.17g} {m.coefficient.imag:.17g} "
                f"{m.frequency.real:.17g} {m.frequency.imag:.17g}"
                for m in self.modes]
        rows.append(f"tail {self.tail_coefficient:.17g}")
        rows.append(f"T {self.thermo.temperature:.17g}")
        return "\n".join(rows)


def build_bath_model(thermo: Thermodynamics,
                     ld: Optional[LorentzDrudeBath] = None,
                     uo: Optional[UndampedBath] = None,
                     K: int | str = "auto",
                     tail_tol: float = 1e-9,
                     ld_convention: str = "cot") -> BathModel:
    """Assemble a BathModel from the configured environments.

    ``K='auto'`` picks the smallest Matsubara count with
    nu_K >= 5*Lambda (ignored when no Lorentz-Drude bath is present).
    """
    if ld is None and uo is None:
        raise DomainError("at least one bath (ld, uo) must be given")
    modes: list[MatsubaraMode] = []
    if uo is not None:
        modes.extend(decompose_uo(uo, thermo))
    kk = 0
    tail = 0.0
    if ld is not None:
        if K == "auto":
            kk = max(1, math.ceil(5.0 * ld.lambda_cutoff
                                  / (2.0 * math.pi * thermo.kT_wavenumber)))
        else:
            kk = int(K)
            if kk < 0:
                raise DomainError(f"K must be >= 0, got {K}")
        modes.extend(decompose_ld(ld, thermo, kk, convention=ld_convention))
        tail = markovian_tail(ld, thermo, kk, tol=tail_tol)
    return BathModel(ld=ld, uo=uo, thermo=thermo, modes=tuple(modes),
                     matsubara_count=kk, tail_coefficient=tail)


def correlation_function(model: BathModel, t):
    """L(t) = sum_a e_a exp(-nu_a * t) in cm^-2; ``t`` in fs (scalar or array).

    At t = 0 this equals the retained-mode sum a0(model).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("correlation_function requires t >= 0")
    e = model.coefficients()
    nu = model.frequencies() * ANGULAR_PER_WAVENUMBER  # 1/fs
    out = np.einsum("a,a...->...", e, np.exp(-np.multiply.outer(nu, t)))
    return out if out.shape else complex(out)


def a0(model: BathModel) -> complex:
    """Total equal-time mode sum A0 = sum_a e_a over the retained modes.

    The real part is what the symmetrised spectral-density integral can
    check; the imaginary part (the Drude -i*eta*Lambda term) is reported
    as-is because the second-order bath moment consumes the full complex
    value.  For a Lorentz-Drude bath the real part grows logarithmically
    with the retained Matsubara count; A0 is therefore always understood
    at the model's truncation.
    """
    if model.n_modes < 1:
        raise DomainError("model has no modes")
    return complex(np.sum(model.coefficients()))


def a0_projected(model: BathModel, origins: Sequence[ModeOrigin]) -> complex:
    """Mode sum restricted to modes whose origin is in ``origins``."""
    allowed = set(origins)
    return complex(sum(m.coefficient for m in model.modes if m.origin in allowed))
