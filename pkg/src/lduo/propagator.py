"""Right-hand side, terminator, and time integration of the hierarchy.

The stacked equations of motion for the auxiliary density operators
(ADOs) are, per retained index n:

    d rho_n / dt = -i [H, rho_n] - (sum_a n_a nu_a) rho_n
                   - tail * [B, [B, rho_n]]
                   - i sum_a [B, rho_{n_a+1}]
                   - i sum_a n_a * (e_a B rho_{n_a-1} - ebar_a rho_{n_a-1} B)

with every coefficient taken in wavenumber units and one global
conversion factor (rad/fs per cm^-1) applied to the whole right-hand
side.  ADO magnitudes are therefore identical to a pure wavenumber-unit
formulation, which is the scale the tier-resolved bath moments are
quoted in.

Indices on the truncation surface (no admissible raise on any axis)
follow the terminator closure: they evolve under their diagonal alone,
keeping the system commutator, the undamped oscillatory part of the
damping sum, and the Markovian tail while the real decay contributions
and the coupling terms drop.  A surface operator that starts at zero
therefore stays zero; ``use_terminator=False`` keeps the plain fully
damped equations at the surface instead.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bath import BathModel
from .errors import (BlowUpError, CheckpointMismatchError, ContractError,
                     DomainError)
from .hierarchy import HierarchySpace
from .units import ANGULAR_PER_WAVENUMBER


def _two_level_projector() -> np.ndarray:
    return np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def _two_level_dipole() -> np.ndarray:
    return np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Two-level system: gap omega_eg (cm^-1), excited-state projector
    coupling operator B, and the transition dipole."""

    omega_eg: float
    coupling_op: np.ndarray = field(default_factory=_two_level_projector)
    dipole_op: np.ndarray = field(default_factory=_two_level_dipole)

    def __post_init__(self):
        b = np.asarray(self.coupling_op, dtype=complex)
        mu = np.asarray(self.dipole_op, dtype=complex)
        if b.shape != (2, 2) or mu.shape != (2, 2):
            raise DomainError("system operators must be 2x2")
        if not np.allclose(b @ b, b, atol=1e-12) or not np.allclose(b, b.conj().T):
            raise DomainError("coupling operator must be an idempotent projector")
        if not np.allclose(mu, mu.conj().T) or abs(mu[0, 0]) + abs(mu[1, 1]) > 1e-12:
            raise DomainError("dipole operator must be Hermitian with zero diagonal")
        object.__setattr__(self, "coupling_op", b)
        object.__setattr__(self, "dipole_op", mu)

    def hamiltonian(self, frame_shift: float = 0.0) -> np.ndarray:
        """H = (omega_eg - frame_shift) |e><e| in cm^-1."""
        h = np.zeros((2, 2), dtype=complex)
        h[1, 1] = self.omega_eg - frame_shift
        return h


@dataclass
class ADOState:
    """Value-type hierarchy state: time (fs) plus the stacked 2x2 ADOs.

    ados[0] is the reduced density matrix; higher-tier ADOs need not be
    Hermitian individually.
    """

    time: float
    ados: np.ndarray  # (N, 2, 2) complex

    def copy(self) -> "ADOState":
        return ADOState(self.time, self.ados.copy())

    @property
    def rho(self) -> np.ndarray:
        return self.ados[0]


def make_initial_state(space: HierarchySpace, kind: str = "ground") -> ADOState:
    """Factorised initial hierarchy with a chosen tier-0 system matrix.

    kinds: 'ground' |g><g|, 'excited' |e><e|, 'superposition'
    (|g>+|e>)(<g|+<e|)/2.
    """
    ados = np.zeros((space.n_indices, 2, 2), dtype=complex)
    if kind == "ground":
        ados[0, 0, 0] = 1.0
    elif kind == "excited":
        ados[0, 1, 1] = 1.0
    elif kind == "superposition":
        ados[0] = 0.5
    else:
        raise DomainError(f"unknown initial state kind {kind!r}")
    return ADOState(time=0.0, ados=ados)


class Generator:
    """Precomputed stencil data for the hierarchy right-hand side."""

    def __init__(self, model: BathModel, space: HierarchySpace,
                 system: SystemModel, frame_shift: float = 0.0,
                 use_terminator: bool = True):
        if model.n_modes != space.n_axes:
            raise ContractError("bath model and hierarchy axis count differ")
        self.model = model
        self.space = space
        self.system = system
        self.frame_shift = frame_shift
        self.use_terminator = use_terminator

        scale = ANGULAR_PER_WAVENUMBER
        self._h_rad = system.hamiltonian(frame_shift) * scale
        self._b = system.coupling_op
        self._tail_rad = model.tail_coefficient * scale

        nu = model.frequencies()
        damp = space.entries @ nu  # (N,) complex, cm^-1
        if use_terminator:
            # Closure at the truncation surface: boundary operators evolve
            # under their diagonal only (couplings drop with the real decay;
            # the undamped oscillatory part and the system terms persist).
            damp = np.where(space.boundary, 1j * damp.imag, damp)
        self._damp_rad = damp * scale

        self._e_rad = model.coefficients() * scale
        self._ebar_rad = model.conj_coefficients() * scale

        # neighbour gathers use a sentinel row of zeros at position N
        n = space.n_indices
        self._plus = np.where(space.plus < 0, n, space.plus)
        self._minus = np.where(space.minus < 0, n, space.minus)
        # lowering weights n_a * e_a and n_a * ebar_a, per axis and index;
        # under the terminator the surface rows take no drive at all
        ent = space.entries.T.astype(complex)  # (D, N)
        self._w_e = ent * self._e_rad[:, None]
        self._w_ebar = ent * self._ebar_rad[:, None]
        if use_terminator:
            self._w_e[:, space.boundary] = 0.0
            self._w_ebar[:, space.boundary] = 0.0

    @property
    def n_indices(self) -> int:
        return self.space.n_indices

    def rhs(self, ados: np.ndarray) -> np.ndarray:
        """Time derivative of the stacked ADO array (1/fs)."""
        if ados.shape != (self.space.n_indices, 2, 2):
            raise ContractError(
                f"state shape {ados.shape} does not match lattice "
                f"({self.space.n_indices} indices)")
        h, b = self._h_rad, self._b
        out = -1j * (h @ ados - ados @ h)
        out -= self._damp_rad[:, None, None] * ados
        if self._tail_rad:
            brho = b @ ados
            rhob = ados @ b
            out -= self._tail_rad * (b @ brho - 2.0 * (b @ rhob) + rhob @ b)
        ext = np.concatenate([ados, np.zeros((1, 2, 2), dtype=complex)])
        # raising: -i sum_a [B, rho_{n_a+1}] collapses to one commutator
        up = ext[self._plus].sum(axis=0)
        out -= 1j * ANGULAR_PER_WAVENUMBER * (b @ up - up @ b)
        # lowering: -i (B W1 - W2 B) with W1/W2 the e/ebar-weighted sums
        dn = ext[self._minus]  # (D, N, 2, 2)
        w1 = np.einsum("an,anij->nij", self._w_e, dn)
        w2 = np.einsum("an,anij->nij", self._w_ebar, dn)
        out -= 1j * (b @ w1 - w2 @ b)
        return out


def step(gen: Generator, state: ADOState, dt: float,
         step_index: int | None = None) -> ADOState:
    """One classical fourth-order Runge-Kutta step."""
    if dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    y = state.ados
    k1 = gen.rhs(y)
    k2 = gen.rhs(y + 0.5 * dt * k1)
    k3 = gen.rhs(y + 0.5 * dt * k2)
    k4 = gen.rhs(y + dt * k3)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        where = "" if step_index is None else f" at step {step_index}"
        raise BlowUpError(f"non-finite ADO values{where} (dt={dt} fs too large "
                          "for the lattice's fastest rate?)", step_index=step_index)
    return ADOState(state.time + dt, out)


def propagate(gen: Generator, state: ADOState, t_final: float, dt: float,
              observers=(), stride: int = 1) -> ADOState:
    """Repeated stepping with read-only observers.

    Observers are callables ``obs(state)`` invoked on the initial state
    and then after every ``stride`` steps (and on the final state if it
    does not fall on a stride boundary).
    """
    if t_final <= state.time:
        raise ContractError(f"t_final={t_final} must exceed state.time={state.time}")
    n_steps = int(round((t_final - state.time) / dt))
    if abs(state.time + n_steps * dt - t_final) > 1e-6:
        raise ContractError(f"(t_final - t0)={t_final - state.time} is not an "
                            f"integer multiple of dt={dt}")
    for obs in observers:
        obs(state)
    for i in range(1, n_steps + 1):
        state = step(gen, state, dt, step_index=i)
        if observers and (i % stride == 0 or i == n_steps):
            for obs in observers:
                obs(state)
    return state


def equilibrate(gen: Generator, dt: float = 1.0, max_time: float = 2000.0,
                tol: float = 1e-10, chunk_steps: int = 50) -> ADOState:
    """Relax the ground-state hierarchy to a stationary point.

    Starts from ados[0] = |g><g| with all higher ADOs zero and
    propagates field-free until the right-hand side's max-norm falls
    below ``tol`` (1/fs) or ``max_time`` fs elapse; in the latter case
    a warning carries the residual and the state is returned anyway.
    """
    state = make_initial_state(gen.space, "ground")
    residual = float(np.max(np.abs(gen.rhs(state.ados))))
    while residual >= tol and state.time < max_time:
        t_next = min(state.time + chunk_steps * dt, max_time)
        state = propagate(gen, state, t_next, dt)
        residual = float(np.max(np.abs(gen.rhs(state.ados))))
    if residual >= tol:
        warnings.warn(f"equilibration stopped at t={state.time} fs with "
                      f"residual {residual:.3e} 1/fs (tol {tol})")
    return state


# -- checkpointing ----------------------------------------------------------

CHECKPOINT_VERSION = 1


def _bath_hash(model: BathModel) -> str:
    return hashlib.sha256(model.canonical_text().encode()).hexdigest()


def _space_hash(space: HierarchySpace) -> str:
    h = hashlib.sha256()
    h.update(space.entries.tobytes())
    h.update(f"{space.rule.gamma_max:.17g}|{space.rule.depth_cap}".encode())
    return h.hexdigest()


def save_checkpoint(path, gen: Generator, state: ADOState) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "bath_hash": _bath_hash(gen.model),
        "space_hash": _space_hash(gen.space),
        "time": state.time,
        "shape": list(state.ados.shape),
        "ados_real": state.ados.real.ravel().tolist(),
        "ados_imag": state.ados.imag.ravel().tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path, gen: Generator) -> ADOState:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointMismatchError(f"unsupported checkpoint version "
                                      f"{doc.get('version')}")
    if doc["bath_hash"] != _bath_hash(gen.model):
        raise CheckpointMismatchError("checkpoint was written for a different "
                                      "bath model")
    if doc["space_hash"] != _space_hash(gen.space):
        raise CheckpointMismatchError("checkpoint was written for a different "
                                      "hierarchy")
    shape = tuple(doc["shape"])
    ados = (np.array(doc["ados_real"]) + 1j * np.array(doc["ados_imag"]))
    return ADOState(time=float(doc["time"]), ados=ados.reshape(shape))
