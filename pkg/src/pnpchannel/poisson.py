"""Finite-volume Poisson solve ``-(eps A psi')' = A S`` with Dirichlet or Robin ends."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError
from .linalg import TridiagonalSystem, thomas_solve
from .mesh import Grid


@dataclass(frozen=True)
class DirichletPotential:
    psi_l: float = 0.0
    psi_r: float = 0.0


@dataclass(frozen=True)
class Robin:
    """``-eta psi' + psi = psi_minus`` at the left end, ``eta psi' + psi = psi_plus`` at the right."""

    eta: float
    psi_minus: float = 0.0
    psi_plus: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")


PotentialBC = Union[DirichletPotential, Robin]


@dataclass(frozen=True)
class ChargeDensity:
    """Net charge per cell, ``sum_i z_i c_ij - rho_j`` plus any manufactured source."""

    s_cell: np.ndarray

    @classmethod
    def from_densities(cls, valences, c: np.ndarray, rho_cell: np.ndarray, extra=None) -> "ChargeDensity":
        s = np.asarray(valences, dtype=float) @ np.asarray(c, dtype=float) - rho_cell
        if extra is not None:
            s = s + extra
        return cls(s)


@dataclass(frozen=True)
class PoissonProblem:
    grid: Grid
    a_cell: np.ndarray
    a_face: np.ndarray
    epsilon: float
    bc: PotentialBC

    def __post_init__(self):
        n = self.grid.n_cells
        if np.shape(self.a_cell) != (n,) or np.shape(self.a_face) != (n + 1,):
            raise ConfigurationError("a_cell/a_face lengths do not match the grid")
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")


def assemble_poisson(problem: PoissonProblem, charge: ChargeDensity) -> TridiagonalSystem:
    """Flux-balance rows scaled by ``h^2 / eps``.

    For Robin ends this is exactly the matrix ``M`` with entries
    ``A_{j+1/2}`` and boundary diagonal boosts ``(h/eta) A_{1/2}``, ``(h/eta) A_{N+1/2}``.
    """
    p = problem
    h = p.grid.h
    s = np.asarray(charge.s_cell, dtype=float)
    if s.shape != (p.grid.n_cells,):
        raise ConfigurationError("charge density length does not match the grid")
    af = p.a_face
    inner = af[1:-1]
    diag = np.zeros(p.grid.n_cells)
    diag[:-1] += inner
    diag[1:] += inner
    rhs = h * h / p.epsilon * p.a_cell * s
    if isinstance(p.bc, Robin):
        kl, kr = h / p.bc.eta * af[0], h / p.bc.eta * af[-1]
        diag[0] += kl
        diag[-1] += kr
        rhs[0] += kl * p.bc.psi_minus
        rhs[-1] += kr * p.bc.psi_plus
    else:
        diag[0] += 2.0 * af[0]
        diag[-1] += 2.0 * af[-1]
        rhs[0] += 2.0 * af[0] * p.bc.psi_l
        rhs[-1] += 2.0 * af[-1] * p.bc.psi_r
    return TridiagonalSystem(-inner, diag, -inner.copy(), rhs)


def solve_poisson(problem: PoissonProblem, charge: ChargeDensity) -> np.ndarray:
    return thomas_solve(assemble_poisson(problem, charge))


def potential_fluxes(problem: PoissonProblem, psi: np.ndarray) -> np.ndarray:
    """Face fluxes ``Psi_{j+1/2}`` for all ``N + 1`` faces."""
    p = problem
    h = p.grid.h
    af = p.a_face
    out = np.empty(p.grid.n_cells + 1)
    out[1:-1] = p.epsilon * af[1:-1] * np.diff(psi) / h
    if isinstance(p.bc, Robin):
        out[0] = p.epsilon / p.bc.eta * af[0] * (psi[0] - p.bc.psi_minus)
        out[-1] = p.epsilon / p.bc.eta * af[-1] * (p.bc.psi_plus - psi[-1])
    else:
        out[0] = p.epsilon * af[0] * 2.0 * (psi[0] - p.bc.psi_l) / h
        out[-1] = p.epsilon * af[-1] * 2.0 * (p.bc.psi_r - psi[-1]) / h
    return out


def poisson_residual(problem: PoissonProblem, charge: ChargeDensity, psi: np.ndarray) -> np.ndarray:
    """``-(Psi_{j+1/2} - Psi_{j-1/2})/h - A_j S_j`` per cell."""
    return -np.diff(potential_fluxes(problem, psi)) / problem.grid.h - problem.a_cell * charge.s_cell


def robin_bound(problem: PoissonProblem) -> float:
    """Right-hand constant ``N^2 eta / (A_{1/2} + A_{N+1/2})`` of the quadratic-form bound."""
    if not isinstance(problem.bc, Robin):
        raise ConfigurationError("the quadratic-form bound is defined for Robin ends only")
    n = problem.grid.n_cells
    return n * n * problem.bc.eta / (problem.a_face[0] + problem.a_face[-1])


def robin_quadratic_ratio(problem: PoissonProblem, zeta: np.ndarray) -> float:
    """``(zeta . M^{-1} zeta) / (bound * |zeta|^2)``; at most 1 when the bound holds."""
    zeta = np.asarray(zeta, dtype=float)
    nrm2 = float(zeta @ zeta)
    if nrm2 == 0.0:
        return 0.0
    m = assemble_poisson(problem, ChargeDensity(np.zeros(problem.grid.n_cells)))
    m.rhs = zeta.copy()
    return float(zeta @ thomas_solve(m)) / (robin_bound(problem) * nrm2)


def robin_matrix_bound_check(problem: PoissonProblem, zeta: np.ndarray) -> bool:
    """Whether ``zeta . M^{-1} zeta <= N^2 eta / (A_{1/2} + A_{N+1/2}) |zeta|^2`` holds for ``zeta``."""
    return robin_quadratic_ratio(problem, zeta) <= 1.0
