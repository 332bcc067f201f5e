"""Two-bath hierarchical equations of motion for a two-level system.

An overdamped Lorentz-Drude environment and an undamped oscillator
environment couple to the same electronic excitation through the
excited-state projector.  The package decomposes both correlation
functions into exponential modes, propagates the resulting hierarchy of
auxiliary density operators, extracts tier-resolved moments of the
collective bath coordinate (including their non-additivity across the
two baths), and computes impulsive third-order 2D electronic spectra.
"""

__version__ = "0.1.0"

from .bath import (BathModel, LorentzDrudeBath, MatsubaraMode, ModeOrigin,
                   UndampedBath, a0, build_bath_model, correlation_function,
                   decompose_ld, decompose_uo, markovian_tail)
from .hierarchy import HierarchySpace, TruncationRule, build, project_mask, tier_of
from .observables import (BathMoment, MomentRecorder, MomentSeries, Projection,
                          moment1, moment2, moment_coefficients, moment_n,
                          residual_series)
from .propagator import (ADOState, Generator, SystemModel, equilibrate,
                         load_checkpoint, make_initial_state, propagate,
                         save_checkpoint, step)
from .units import (CONSTANTS, PhysicalConstants, Thermodynamics,
                    angular_to_wavenumber, beta_from_temperature,
                    wavenumber_to_angular)
