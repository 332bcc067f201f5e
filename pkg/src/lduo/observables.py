"""Tier-resolved moments of the collective bath coordinate.

The interaction is written -F (x) B with F the weighted sum of bath
positions; operator-valued moments of F are recovered from tier sums of
the auxiliary density operators:

    X^(1) = - sum_{tier 1} rho_n
    X^(2) = A0 rho_0 + sum_{tier 2, one entry = 2} rho_n
                     + 2 sum_{tier 2, two entries = 1} rho_n

and in general X^(n+1) = sum_i L_i^(n+1) sum_{tier i} i!/prod(n_a!) rho_n
with the coefficient recursion L_i^(n+1) = -L_{i-1}^(n) + n A0 L_i^(n-1),
L_0^(0) = 1.  A0 is the (complex) equal-time mode sum; under a
projection both the tier sums and A0 are restricted to the selected
axes.  Moments are returned as full 2x2 matrices; scalarisation (for
example, plotting the diagonals) is presentation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .bath import BathModel, ModeOrigin, a0_projected
from .errors import ContractError, DomainError
from .hierarchy import HierarchySpace, project_mask
from .propagator import ADOState

_UO_ORIGINS = (ModeOrigin.UO_PLUS, ModeOrigin.UO_MINUS)
_LD_ORIGINS = (ModeOrigin.LD_DRUDE, ModeOrigin.LD_MATSUBARA)


class Projection(enum.Enum):
    FULL = "full"
    UO_ONLY = "uo"
    LD_ONLY = "ld"


@dataclass(frozen=True)
class BathMoment:
    order: int
    value: np.ndarray  # (2, 2) complex
    projection: Projection
    time: float

    def __post_init__(self):
        if self.order < 1:
            raise DomainError(f"moment order must be >= 1, got {self.order}")


def projection_axes(space: HierarchySpace, projection: Projection) -> list[int]:
    if projection is Projection.FULL:
        return list(range(space.n_axes))
    origins = _UO_ORIGINS if projection is Projection.UO_ONLY else _LD_ORIGINS
    axes = space.axes_for(origins)
    if not axes:
        raise DomainError(f"lattice has no axes for projection {projection.value}")
    return axes


def projection_origins(projection: Projection):
    if projection is Projection.FULL:
        return tuple(ModeOrigin)
    return _UO_ORIGINS if projection is Projection.UO_ONLY else _LD_ORIGINS


def _mask(space: HierarchySpace, projection: Projection) -> np.ndarray:
    return project_mask(space, projection_axes(space, projection))


def moment1(space: HierarchySpace, state: ADOState,
            projection: Projection = Projection.FULL) -> BathMoment:
    """First moment: minus the masked tier-1 ADO sum."""
    if state.ados.shape[0] != space.n_indices:
        raise ContractError("state does not match lattice")
    sel = _mask(space, projection) & (space.tiers == 1)
    value = -state.ados[sel].sum(axis=0) if sel.any() else np.zeros((2, 2), complex)
    return BathMoment(1, value, projection, state.time)


def moment2(space: HierarchySpace, state: ADOState, model: BathModel,
            projection: Projection = Projection.FULL) -> BathMoment:
    """Second moment: A0 rho_0 plus the weighted masked tier-2 sums."""
    if state.ados.shape[0] != space.n_indices:
        raise ContractError("state does not match lattice")
    if space.max_tier < 2:
        raise ContractError("second moment needs hierarchy depth >= 2")
    mask = _mask(space, projection)
    a0p = a0_projected(model, projection_origins(projection))
    value = a0p * state.ados[0].copy()
    sel2 = mask & (space.tiers == 2)
    if sel2.any():
        ent = space.entries[sel2]
        single = (ent == 2).any(axis=1)          # one axis doubly excited
        value += state.ados[sel2][single].sum(axis=0) if single.any() else 0.0
        pair = ~single                            # two distinct axes singly excited
        if pair.any():
            value += 2.0 * state.ados[sel2][pair].sum(axis=0)
    return BathMoment(2, value, projection, state.time)


def moment_coefficients(order: int, a0_value: complex) -> np.ndarray:
    """Table L[k, i] of the moment recursion up to ``order``.

    L[0, 0] = 1 and L[k+1, i] = -L[k, i-1] + k*A0*L[k-1, i]; entries
    outside 0 <= i <= k are zero.  Complex because A0 is complex for a
    Lorentz-Drude bath.
    """
    if order < 0:
        raise DomainError("order must be >= 0")
    table = np.zeros((order + 1, order + 2), dtype=complex)
    table[0, 0] = 1.0
    for k in range(order):
        nxt = np.zeros(order + 2, dtype=complex)
        nxt[1:] = -table[k, :-1]
        if k >= 1:
            nxt += k * a0_value * table[k - 1]
        table[k + 1] = nxt
    return table[:, :order + 1]


def moment_n(space: HierarchySpace, state: ADOState, model: BathModel,
             order: int, projection: Projection = Projection.FULL) -> BathMoment:
    """General moment through the coefficient recursion with multinomial
    tier weights i!/prod(n_a!)."""
    if order < 1:
        raise DomainError(f"moment order must be >= 1, got {order}")
    if state.ados.shape[0] != space.n_indices:
        raise ContractError("state does not match lattice")
    if space.max_tier < order:
        raise ContractError(f"moment of order {order} needs hierarchy depth "
                            f">= {order} (lattice has {space.max_tier})")
    mask = _mask(space, projection)
    a0p = a0_projected(model, projection_origins(projection))
    table = moment_coefficients(order, a0p)
    coeffs = table[order]
    value = np.zeros((2, 2), dtype=complex)
    fact = [math.factorial(i) for i in range(order + 1)]
    for i in range(order + 1):
        if coeffs[i] == 0:
            continue
        sel = mask & (space.tiers == i)
        if not sel.any():
            continue
        ent = space.entries[sel]
        multinom = fact[i] / np.prod(
            np.vectorize(math.factorial)(ent), axis=1).astype(float)
        value += coeffs[i] * np.einsum("n,nij->ij", multinom,
                                       state.ados[sel])
    return BathMoment(order, value, projection, state.time)


@dataclass
class MomentSeries:
    """Recorded moment trajectory: times (fs) and (T, 2, 2) values."""

    order: int
    projection: Projection
    times: np.ndarray
    values: np.ndarray


class MomentRecorder:
    """Propagation observer collecting chosen moments at each callback."""

    def __init__(self, space: HierarchySpace, model: BathModel,
                 orders=(1, 2), projections=(Projection.FULL,)):
        self.space = space
        self.model = model
        self.orders = tuple(orders)
        self.projections = tuple(projections)
        self.times: list[float] = []
        self._data = {(o, p): [] for o in self.orders for p in self.projections}

    def __call__(self, state: ADOState) -> None:
        self.times.append(state.time)
        for o in self.orders:
            for p in self.projections:
                if o == 1:
                    m = moment1(self.space, state, p)
                elif o == 2:
                    m = moment2(self.space, state, self.model, p)
                else:
                    m = moment_n(self.space, state, self.model, o, p)
                self._data[(o, p)].append(m.value)

    def series(self, order: int, projection: Projection) -> MomentSeries:
        vals = np.array(self._data[(order, projection)])
        return MomentSeries(order, projection, np.array(self.times), vals)


def residual_series(full: MomentSeries, ld: MomentSeries,
                    uo: MomentSeries) -> tuple[MomentSeries, float, float]:
    """Non-additivity residual X_full - X_ld - X_uo on a shared grid.

    Returns the residual series, its sup norm (max absolute entry) and
    the time-integrated norm (trapezoidal integral of the max-entry
    norm, in fs).  A vanishing residual means the two baths do not
    communicate through the system.
    """
    if full.order != ld.order or full.order != uo.order:
        raise ContractError("residual requires a common moment order")
    if (full.times.shape != ld.times.shape or full.times.shape != uo.times.shape
            or not np.allclose(full.times, ld.times, atol=1e-9)
            or not np.allclose(full.times, uo.times, atol=1e-9)):
        raise ContractError("residual requires a shared time grid")
    vals = full.values - ld.values - uo.values
    norms = np.abs(vals).reshape(len(full.times), -1).max(axis=1)
    sup = float(norms.max()) if len(norms) else 0.0
    integral = float(np.trapezoid(norms, full.times)) if len(norms) > 1 else 0.0
    out = MomentSeries(full.order, Projection.FULL, full.times.copy(), vals)
    return out, sup, integral
