"""Truncated lattice of auxiliary-density-operator multi-indices.

Each bath mode contributes one axis; a lattice point is a vector of
non-negative excitation numbers, one per mode.  Retention is governed
by an admission weight w(n) = sum_a n_a * w_hat_a, where w_hat is the
real decay rate for damped (Lorentz-Drude) axes and |Im nu| for the
undamped pair, plus a hard tier cap.  Tiers (index sums) are contiguous
in the ordering so tier-resolved reductions are range sums.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .bath import BathModel, ModeOrigin
from .errors import DomainError, ResourceError

#: default hard bound on the number of retained indices; the
#: LDUO_MAX_NODES environment variable overrides it.
DEFAULT_MAX_NODES = 500_000


@dataclass(frozen=True)
class TruncationRule:
    """Admission weight bound (cm^-1) plus a hard tier cap."""

    gamma_max: float
    depth_cap: int = 12
    max_nodes: int | None = None

    def __post_init__(self):
        if not self.gamma_max > 0:
            raise DomainError(f"gamma_max must be > 0, got {self.gamma_max}")
        if self.depth_cap < 1:
            raise DomainError(f"depth_cap must be >= 1, got {self.depth_cap}")

    def node_budget(self) -> int:
        if self.max_nodes is not None:
            return self.max_nodes
        env = os.environ.get("LDUO_MAX_NODES")
        return int(env) if env else DEFAULT_MAX_NODES


def axis_weight(origin: ModeOrigin, frequency: complex) -> float:
    """Admission weight of one axis: Re(nu) if damped, |Im(nu)| if not."""
    if origin in (ModeOrigin.UO_PLUS, ModeOrigin.UO_MINUS):
        return abs(frequency.imag)
    return frequency.real


def tier_of(idx) -> int:
    """Tier of a multi-index: the sum of its entries."""
    return int(np.sum(idx))


class HierarchySpace:
    """Immutable enumeration of retained multi-indices with neighbour tables.

    Position 0 is the all-zero index (the reduced density matrix).
    ``plus[a, i]``/``minus[a, i]`` give the position of the index with
    axis ``a`` raised/lowered, or -1 when that index is not retained.
    """

    def __init__(self, entries: np.ndarray, weights: np.ndarray,
                 axis_weights: np.ndarray, origins: tuple[ModeOrigin, ...],
                 rule: TruncationRule):
        self.entries = entries                      # (N, D) int
        self.tiers = entries.sum(axis=1).astype(np.int64)
        self.weights = weights                      # (N,)
        self.axis_weights = axis_weights            # (D,)
        self.origins = origins
        self.rule = rule
        self.lookup = {tuple(row): i for i, row in enumerate(entries)}
        n, d = entries.shape
        self.plus = np.full((d, n), -1, dtype=np.int64)
        self.minus = np.full((d, n), -1, dtype=np.int64)
        for i, row in enumerate(entries):
            for a in range(d):
                up = list(row)
                up[a] += 1
                j = self.lookup.get(tuple(up))
                if j is not None:
                    self.plus[a, i] = j
                    self.minus[a, j] = i
        # surface indices: no admissible raise along any axis
        self.boundary = (self.plus < 0).all(axis=0)

    @property
    def n_indices(self) -> int:
        return self.entries.shape[0]

    @property
    def n_axes(self) -> int:
        return self.entries.shape[1]

    @property
    def max_tier(self) -> int:
        return int(self.tiers.max())

    def tier_positions(self, tier: int) -> np.ndarray:
        lo = np.searchsorted(self.tiers, tier, side="left")
        hi = np.searchsorted(self.tiers, tier, side="right")
        return np.arange(lo, hi)

    def axes_for(self, origins) -> list[int]:
        wanted = set(origins)
        return [a for a, o in enumerate(self.origins) if o in wanted]


def build(model: BathModel, rule: TruncationRule) -> HierarchySpace:
    """Breadth-first enumeration of the retained lattice.

    Raises :class:`ResourceError` when the admission rule would retain
    more indices than the configured budget.
    """
    if model.n_modes < 1:
        raise DomainError("bath model has no modes")
    origins = model.axis_origins()
    freqs = model.frequencies()
    w_hat = np.array([axis_weight(o, f) for o, f in zip(origins, freqs)])
    d = len(w_hat)
    budget = rule.node_budget()

    zero = (0,) * d
    seen = {zero}
    tiers = [[zero]]
    frontier = [zero]
    while frontier and len(tiers) <= rule.depth_cap:
        nxt = set()
        for idx in frontier:
            for a in range(d):
                cand = idx[:a] + (idx[a] + 1,) + idx[a + 1:]
                if cand in seen or cand in nxt:
                    continue
                if float(np.dot(cand, w_hat)) <= rule.gamma_max:
                    nxt.add(cand)
        if not nxt:
            break
        frontier = sorted(nxt)
        seen.update(frontier)
        tiers.append(frontier)
        if len(seen) > budget:
            raise ResourceError(
                f"lattice exceeds {budget} nodes under rule "
                f"gamma_max={rule.gamma_max} cm^-1, depth_cap={rule.depth_cap} "
                f"(set LDUO_MAX_NODES or tighten the rule)")

    entries = np.array([idx for tier in tiers for idx in tier], dtype=np.int64)
    weights = entries @ w_hat
    return HierarchySpace(entries, weights, w_hat, origins, rule)


def project_mask(space: HierarchySpace, axes) -> np.ndarray:
    """Boolean mask selecting indices supported on ``axes`` only.

    True exactly where every entry outside ``axes`` is zero; the zero
    index is selected by every projection.
    """
    axes = sorted(set(int(a) for a in axes))
    if not axes:
        raise DomainError("projection requires at least one axis")
    for a in axes:
        if a < 0 or a >= space.n_axes:
            raise DomainError(f"unknown axis id {a} (lattice has {space.n_axes})")
    others = [a for a in range(space.n_axes) if a not in axes]
    if not others:
        return np.ones(space.n_indices, dtype=bool)
    return (space.entries[:, others] == 0).all(axis=1)


def multiset_count(depth: int, axes: int) -> int:
    """Number of lattice points with entry sum <= depth over ``axes`` axes."""
    return math.comb(depth + axes, axes)


def dump_lattice(space: HierarchySpace, path) -> None:
    """Write the lattice as JSON lines: index, tier, weight, neighbours."""
    with open(path, "w") as fh:
        for i in range(space.n_indices):
            rec = {
                "position": i,
                "index": [int(v) for v in space.entries[i]],
                "tier": int(space.tiers[i]),
                "weight": float(space.weights[i]),
                "plus": [int(v) for v in space.plus[:, i]],
                "minus": [int(v) for v in space.minus[:, i]],
                "boundary": bool(space.boundary[i]),
            }
            fh.write(json.dumps(rec) + "\n")
