"""Coupled multi-species PNP stepping and diagnostics.

Each step solves the Poisson equation from the current densities and then
advances every species by one semi-implicit transport step in which the
potential is frozen (``phi = -z_i psi``). A :class:`State` always carries the
potential consistent with its densities, so ``state.psi`` is the ``psi^n``
used by the next step.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterator, Sequence, Union

import numpy as np

from . import transport
from .errors import ConfigurationError, DomainError
from .mesh import Grid, PiecewiseCoefficient, cell_averages
from .poisson import ChargeDensity, DirichletPotential, PoissonProblem, Robin, solve_poisson
from .transport import BoundarySpec, FluxOrder, TransportProblem

logger = logging.getLogger(__name__)

DIRICHLET = "dirichlet"
ZERO_FLUX_ROBIN = "zero_flux_robin"

TimeFunction = Union[float, Callable[[float], float]]
SourceFunction = Callable[[np.ndarray, float], np.ndarray]


def _at(value: TimeFunction, t: float) -> float:
    return float(value(t)) if callable(value) else float(value)


def _as_coefficient(value) -> PiecewiseCoefficient:
    if isinstance(value, PiecewiseCoefficient):
        return value
    if callable(value):
        return PiecewiseCoefficient.smooth(value)
    return PiecewiseCoefficient.constant(value)


@dataclass(frozen=True)
class SpeciesSpec:
    """One mobile ion species: valence, diffusion coefficient, Dirichlet reservoir densities."""

    z: float
    diffusion: PiecewiseCoefficient | float = 1.0
    c_l: float = 0.0
    c_r: float = 0.0

    def __post_init__(self):
        if self.c_l < 0 or self.c_r < 0:
            raise DomainError(f"boundary densities must be >= 0, got {self.c_l}, {self.c_r}")
        object.__setattr__(self, "diffusion", _as_coefficient(self.diffusion))


@dataclass(frozen=True)
class SystemSpec:
    """Complete discrete problem statement.

    ``psi_l``/``V`` (Dirichlet) may be callables of time. ``sources`` maps
    ``(x, t)`` to an ``(m, len(x))`` array of transport sources ``f_i`` (in
    units of ``c_t``) and ``poisson_source`` maps ``(x, t)`` to an extra
    charge term. Both are sampled at cell centers; transport sources enter
    each cell as ``tau * A(x_j) f_i(x_j, t)`` with ``t`` the old time level
    (``source_time="old"``) or the new one (``"new"``).
    """

    grid: Grid
    species: Sequence[SpeciesSpec]
    epsilon: float
    tau: float
    area: PiecewiseCoefficient | float = 1.0
    rho: PiecewiseCoefficient | float = 0.0
    bc_kind: str = DIRICHLET
    psi_l: TimeFunction = 0.0
    V: TimeFunction = 0.0
    eta: float = 1.0
    psi_minus: float = 0.0
    psi_plus: float = 0.0
    flux_order: FluxOrder = FluxOrder.FIRST
    sources: SourceFunction | None = None
    poisson_source: SourceFunction | None = None
    source_time: str = "old"

    def __post_init__(self):
        if self.bc_kind not in (DIRICHLET, ZERO_FLUX_ROBIN):
            raise ConfigurationError(f"unknown bc_kind {self.bc_kind!r}")
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.bc_kind == ZERO_FLUX_ROBIN and not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        if self.source_time not in ("old", "new"):
            raise ConfigurationError(f"source_time must be 'old' or 'new', got {self.source_time!r}")
        if len(self.species) == 0:
            raise ConfigurationError("at least one species is required")
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "area", _as_coefficient(self.area))
        object.__setattr__(self, "rho", _as_coefficient(self.rho))
        if np.any(self.a_cell <= 0) or np.any(self.a_face <= 0):
            raise ConfigurationError("cross-sectional area must be strictly positive")

    @property
    def m(self) -> int:
        return len(self.species)

    @property
    def is_dirichlet(self) -> bool:
        return self.bc_kind == DIRICHLET

    @cached_property
    def valences(self) -> np.ndarray:
        return np.array([s.z for s in self.species], dtype=float)

    @cached_property
    def a_cell(self) -> np.ndarray:
        return cell_averages(self.area, self.grid)

    @cached_property
    def a_face(self) -> np.ndarray:
        return self.area(self.grid.interfaces)

    @cached_property
    def a_center(self) -> np.ndarray:
        return self.area(self.grid.centers)

    @cached_property
    def rho_cell(self) -> np.ndarray:
        return cell_averages(self.rho, self.grid)

    @cached_property
    def b_face(self) -> np.ndarray:
        """``A_{j+1/2} D_i(x_{j+1/2})``, shape ``(m, N + 1)``."""
        return np.array([self.a_face * s.diffusion(self.grid.interfaces) for s in self.species])

    def poisson_problem(self, t: float) -> PoissonProblem:
        if self.is_dirichlet:
            bc = DirichletPotential(_at(self.psi_l, t), _at(self.V, t))
        else:
            bc = Robin(self.eta, self.psi_minus, self.psi_plus)
        return PoissonProblem(self.grid, self.a_cell, self.a_face, self.epsilon, bc)

    def charge(self, c: np.ndarray, t: float) -> ChargeDensity:
        extra = None
        if self.poisson_source is not None:
            extra = np.asarray(self.poisson_source(self.grid.centers, t), dtype=float)
        return ChargeDensity.from_densities(self.valences, c, self.rho_cell, extra)

    def potential(self, c: np.ndarray, t: float) -> np.ndarray:
        return solve_poisson(self.poisson_problem(t), self.charge(c, t))

    def transport_problem(self, i: int, psi: np.ndarray, t_n: float,
                          source: np.ndarray | None = None) -> TransportProblem:
        sp = self.species[i]
        if self.is_dirichlet:
            bc = BoundarySpec("dirichlet", sp.c_l, sp.c_r,
                              -sp.z * _at(self.psi_l, t_n), -sp.z * _at(self.V, t_n))
        else:
            bc = BoundarySpec.zero_flux()
        return TransportProblem.with_midpoint_faces(
            self.grid, self.a_cell, self.b_face[i], -sp.z * np.asarray(psi, dtype=float),
            self.tau, bc, flux_order=self.flux_order, source_cell=source)


@dataclass(frozen=True)
class State:
    t: float
    c: np.ndarray
    psi: np.ndarray
    step_index: int = 0

    @property
    def min_density(self) -> float:
        return float(self.c.min())


def initialize(spec: SystemSpec, initial_densities) -> State:
    """Cell-average the initial densities and solve for the matching potential.

    ``initial_densities`` is a sequence of ``m`` entries, each a callable of
    ``x``, a :class:`PiecewiseCoefficient`, or an array of ``N`` cell values.
    """
    if len(initial_densities) != spec.m:
        raise ConfigurationError(f"expected {spec.m} initial densities, got {len(initial_densities)}")
    rows = []
    for k, init in enumerate(initial_densities):
        if callable(init):
            row = cell_averages(_as_coefficient(init), spec.grid)
        else:
            row = np.asarray(init, dtype=float)
            if row.shape != (spec.grid.n_cells,):
                raise ConfigurationError(f"initial density {k} must have {spec.grid.n_cells} values")
        rows.append(row)
    c = np.array(rows, dtype=float)
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise DomainError("initial densities must be finite and nonnegative")
    return State(0.0, c, spec.potential(c, 0.0), 0)


def step(spec: SystemSpec, state: State, psi_override: np.ndarray | None = None) -> State:
    """One time step.

    ``psi_override`` replaces the potential driving the transport sub-step
    (any bounded values); the returned state still carries the Poisson
    potential of the new densities.
    """
    psi_n = state.psi if psi_override is None else np.asarray(psi_override, dtype=float)
    t_next = state.t + spec.tau
    src = None
    if spec.sources is not None:
        t_src = state.t if spec.source_time == "old" else t_next
        src = spec.a_center * np.asarray(spec.sources(spec.grid.centers, t_src), dtype=float)
    c_next = np.empty_like(state.c)
    for i in range(spec.m):
        prob = spec.transport_problem(i, psi_n, state.t, None if src is None else src[i])
        c_next[i] = transport.step(prob, state.c[i])
    return State(t_next, c_next, spec.potential(c_next, t_next), state.step_index + 1)


def iterate(spec: SystemSpec, state: State) -> Iterator[State]:
    """Endless stream of successive states (excluding ``state`` itself)."""
    while True:
        state = step(spec, state)
        yield state


def advance(spec: SystemSpec, state: State, n_steps: int) -> State:
    for _ in range(n_steps):
        state = step(spec, state)
    return state


def total_mass(spec: SystemSpec, state: State, i: int) -> float:
    return float(spec.grid.h * np.dot(spec.a_cell, state.c[i]))


def _xlogx(c: np.ndarray) -> np.ndarray:
    if np.any(c < 0):
        raise DomainError("negative density in entropy term")
    out = np.zeros_like(c)
    pos = c > 0
    out[pos] = c[pos] * np.log(c[pos])
    return out


def discrete_energy(spec: SystemSpec, state: State) -> float:
    """Entropy + electrostatic energy + Robin boundary terms (0 log 0 := 0)."""
    if spec.is_dirichlet:
        raise ConfigurationError("the discrete free energy is defined for zero-flux/Robin runs only")
    h = spec.grid.h
    s = spec.charge(state.c, state.t).s_cell
    bulk = h * np.dot(spec.a_cell, _xlogx(state.c).sum(axis=0) + 0.5 * s * state.psi)
    edge = spec.epsilon / (2.0 * spec.eta) * (
        spec.psi_plus * spec.a_face[-1] * state.psi[-1] + spec.psi_minus * spec.a_face[0] * state.psi[0])
    return float(bulk + edge)


def dissipation_rate(spec: SystemSpec, psi_n: np.ndarray, c_next: np.ndarray) -> float:
    """Nonnegative dissipation ``I_h^n`` of one step.

    Sum over species and interior faces of
    ``A_{j+1/2} D_i e^{-z_i psi_{j+1/2}} (G_{j+1} - G_j)(log G_{j+1} - log G_j) / h`` with
    ``G = c^{n+1} exp(z_i psi^n)``; the face weight is exactly the one of the
    transport flux, so that ``sum_j h A_j (c^{n+1} - c^n)(log c^{n+1} + z psi^n) = -tau I_h``.
    Faces with both ``G`` values zero contribute nothing; a face with exactly
    one zero value gives ``inf``.
    """
    c_next = np.asarray(c_next, dtype=float)
    psi_n = np.asarray(psi_n, dtype=float)
    if np.any(c_next < 0):
        raise DomainError("negative density in dissipation rate")
    h = spec.grid.h
    psi_mid = 0.5 * (psi_n[:-1] + psi_n[1:])
    total = 0.0
    for i, sp in enumerate(spec.species):
        g = c_next[i] * np.exp(sp.z * psi_n)
        gl, gr = g[:-1], g[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            term = (gr - gl) * (np.log(gr) - np.log(gl))
        term = np.where(gl == gr, 0.0, term)
        weight = spec.b_face[i][1:-1] * np.exp(-sp.z * psi_mid)
        total += float(np.sum(weight * term)) / h
    return total


def current_profile(spec: SystemSpec, state: State) -> np.ndarray:
    """Charge flux ``-sum_i z_i C_{i,j+1/2}`` at the ``N - 1`` interior faces, from level-n data."""
    out = np.zeros(spec.grid.n_cells - 1)
    for i, sp in enumerate(spec.species):
        if sp.z == 0:
            continue
        prob = spec.transport_problem(i, state.psi, state.t)
        out -= sp.z * transport.face_fluxes(prob, state.c[i])[1:-1]
    return out


def psi_change(a: State, b: State) -> float:
    return float(np.max(np.abs(b.psi - a.psi)))


@dataclass
class SteadyRun:
    state: State
    steps: int
    converged: bool
    dpsi: float
    wall_time: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def t_s(self) -> float:
        return self.state.t


def run_to_steady(spec: SystemSpec, state0: State, tol: float, max_steps: int = 100_000,
                  monitor: Callable[[State, State], None] | None = None) -> SteadyRun:
    """Step until ``max|psi^n - psi^{n-1}| <= tol``.

    ``monitor(previous, current)`` is called after each step. Hitting
    ``max_steps`` returns an unconverged :class:`SteadyRun` instead of raising.
    """
    if not tol > 0:
        raise ConfigurationError(f"tol must be positive, got {tol}")
    start = time.perf_counter()
    prev = state0
    dpsi = np.inf
    for n in range(1, max_steps + 1):
        cur = step(spec, prev)
        dpsi = psi_change(prev, cur)
        if monitor is not None:
            monitor(prev, cur)
        prev = cur
        if dpsi <= tol:
            return SteadyRun(cur, n, True, dpsi, time.perf_counter() - start)
    logger.warning("no steady state after %d steps (last |dpsi| = %.3e)", max_steps, dpsi)
    return SteadyRun(prev, max_steps, False, dpsi, time.perf_counter() - start)


def with_potential_bc(spec: SystemSpec, **changes) -> SystemSpec:
    """Copy of ``spec`` with fields replaced (cached arrays are recomputed)."""
    return replace(spec, **changes)
