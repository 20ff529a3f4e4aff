"""Semi-implicit finite-volume step for the model drift-diffusion equation

    A(x) u_t = d/dx( B(x) e^{phi} d/dx( u e^{-phi} ) ) + s(x)

written in the Slotboom variable ``G = u e^{-phi}``. The potential is frozen
at the old time level, so one step is a single tridiagonal solve whose
matrix is an M-matrix for the zero-flux and the first/zeroth-order
Dirichlet boundary fluxes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .linalg import TridiagonalSystem, thomas_solve
from .mesh import Grid

MAX_ABS_PHI = 700.0


class FluxOrder(enum.Enum):
    """Accuracy of the Dirichlet boundary flux."""

    ZEROTH = "zeroth"
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class BoundarySpec:
    kind: str = "dirichlet"
    u_l: float = 0.0
    u_r: float = 0.0
    phi_l: float = 0.0
    phi_r: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "zero_flux"):
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet" and (self.u_l < 0 or self.u_r < 0):
            raise DomainError(f"Dirichlet densities must be >= 0, got {self.u_l}, {self.u_r}")

    @classmethod
    def zero_flux(cls) -> "BoundarySpec":
        return cls(kind="zero_flux")

    @property
    def is_dirichlet(self) -> bool:
        return self.kind == "dirichlet"


def face_potential(phi_cell: np.ndarray, phi_l: float, phi_r: float) -> np.ndarray:
    """Midpoint interior face values with prescribed boundary values."""
    out = np.empty(phi_cell.size + 1)
    out[1:-1] = 0.5 * (phi_cell[:-1] + phi_cell[1:])
    out[0] = phi_l
    out[-1] = phi_r
    return out


@dataclass(frozen=True)
class TransportProblem:
    grid: Grid
    a_cell: np.ndarray
    b_face: np.ndarray
    phi_cell: np.ndarray
    phi_face: np.ndarray
    tau: float
    bc: BoundarySpec
    flux_order: FluxOrder = FluxOrder.FIRST
    source_cell: np.ndarray | None = None  # per-cell value of the source s = A f, not f

    def __post_init__(self):
        n = self.grid.n_cells
        for name, size in (("a_cell", n), ("b_face", n + 1), ("phi_cell", n), ("phi_face", n + 1)):
            arr = getattr(self, name)
            if not isinstance(arr, np.ndarray) or arr.dtype != np.float64:
                arr = np.asarray(arr, dtype=float)
                object.__setattr__(self, name, arr)
            if arr.shape != (size,):
                raise ConfigurationError(f"{name} must have length {size}, got shape {arr.shape}")
        if self.source_cell is not None:
            src = np.asarray(self.source_cell, dtype=float)
            if src.shape != (n,):
                raise ConfigurationError(f"source_cell must have length {n}")
            object.__setattr__(self, "source_cell", src)
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        if not (self.a_cell.min() > 0 and self.b_face.min() > 0):
            raise ConfigurationError("A and B coefficients must be strictly positive")
        if max(-self.phi_cell.min(), self.phi_cell.max(), -self.phi_face.min(), self.phi_face.max()) > MAX_ABS_PHI:
            raise OverflowError(f"|phi| exceeds {MAX_ABS_PHI}; exponentials would overflow "
                                "(a lagged potential this large usually means tau is too big for the coupling)")

    @classmethod
    def with_midpoint_faces(cls, grid, a_cell, b_face, phi_cell, tau, bc, **kwargs):
        phi_cell = np.asarray(phi_cell, dtype=float)
        if bc.is_dirichlet:
            phi_l, phi_r = bc.phi_l, bc.phi_r
        else:
            # boundary faces carry no flux; any finite value will do
            phi_l, phi_r = phi_cell[0], phi_cell[-1]
        return cls(grid, a_cell, b_face, phi_cell, face_potential(phi_cell, phi_l, phi_r),
                   tau, bc, **kwargs)

    @property
    def mesh_ratio(self) -> float:
        return self.tau / self.grid.h ** 2


def assemble(problem: TransportProblem, u_n: np.ndarray) -> TridiagonalSystem:
    """Linear system for ``G_j = u^{n+1}_j exp(-phi_j)``."""
    p = problem
    u_n = np.asarray(u_n, dtype=float)
    if u_n.shape != (p.grid.n_cells,):
        raise ConfigurationError(f"u_n must have length {p.grid.n_cells}, got shape {u_n.shape}")
    lam = p.mesh_ratio
    w = p.b_face * np.exp(p.phi_face)
    inner = lam * w[1:-1]

    diag = p.a_cell * np.exp(p.phi_cell)
    diag[:-1] += inner
    diag[1:] += inner
    upper = -inner
    lower = -inner.copy()
    rhs = p.a_cell * u_n
    if p.source_cell is not None:
        rhs += p.tau * p.source_cell

    if p.bc.is_dirichlet:
        wl, wr = lam * w[0], lam * w[-1]
        # w * u_b * exp(-phi_b) == b_face * u_b
        bl, br = lam * p.b_face[0] * p.bc.u_l, lam * p.b_face[-1] * p.bc.u_r
        if p.flux_order is FluxOrder.SECOND:
            diag[0] += 3.0 * wl
            upper[0] -= wl / 3.0
            rhs[0] += 8.0 / 3.0 * bl
            diag[-1] += 3.0 * wr
            lower[-1] -= wr / 3.0
            rhs[-1] += 8.0 / 3.0 * br
        else:
            k = 2.0 if p.flux_order is FluxOrder.FIRST else 1.0
            diag[0] += k * wl
            rhs[0] += k * bl
            diag[-1] += k * wr
            rhs[-1] += k * br
    return TridiagonalSystem(lower, diag, upper, rhs)


def step(problem: TransportProblem, u_n: np.ndarray) -> np.ndarray:
    """Advance ``u`` by one time step. Nonnegative data stays nonnegative
    (first/zeroth-order Dirichlet fluxes or zero flux, no source) for any tau."""
    g = thomas_solve(assemble(problem, u_n))
    return np.exp(problem.phi_cell) * g


def face_fluxes(problem: TransportProblem, u: np.ndarray) -> np.ndarray:
    """All ``N + 1`` face fluxes ``U_{j+1/2}`` evaluated from ``u`` (any level)."""
    p = problem
    h = p.grid.h
    g = np.asarray(u, dtype=float) * np.exp(-p.phi_cell)
    w = p.b_face * np.exp(p.phi_face)
    out = np.zeros(p.grid.n_cells + 1)
    out[1:-1] = w[1:-1] * np.diff(g) / h
    if p.bc.is_dirichlet:
        gl = p.bc.u_l * np.exp(-p.phi_face[0])
        gr = p.bc.u_r * np.exp(-p.phi_face[-1])
        if p.flux_order is FluxOrder.SECOND:
            out[0] = w[0] * (-g[1] / 3.0 + 3.0 * g[0] - 8.0 / 3.0 * gl) / h
            out[-1] = w[-1] * (g[-2] / 3.0 - 3.0 * g[-1] + 8.0 / 3.0 * gr) / h
        else:
            k = 2.0 if p.flux_order is FluxOrder.FIRST else 1.0
            out[0] = w[0] * k * (g[0] - gl) / h
            out[-1] = w[-1] * k * (gr - g[-1]) / h
    return out


def interior_flux(problem: TransportProblem, u: np.ndarray, j_face: int) -> float:
    """Flux through interior face ``j_face`` (between cells ``j_face - 1`` and ``j_face``)."""
    n = problem.grid.n_cells
    if not 1 <= j_face <= n - 1:
        raise IndexError(f"interior face index must lie in 1..{n - 1}, got {j_face}")
    p = problem
    jl, jr = j_face - 1, j_face
    return float(p.b_face[j_face] * np.exp(p.phi_face[j_face])
                 * (u[jr] * np.exp(-p.phi_cell[jr]) - u[jl] * np.exp(-p.phi_cell[jl])) / p.grid.h)


def residual(problem: TransportProblem, u_n: np.ndarray, u_next: np.ndarray) -> np.ndarray:
    """Per-cell defect of ``A (u' - u)/tau - (U_{j+1/2} - U_{j-1/2})/h - s``."""
    p = problem
    flux = face_fluxes(p, u_next)
    r = p.a_cell * (np.asarray(u_next) - np.asarray(u_n)) / p.tau - np.diff(flux) / p.grid.h
    if p.source_cell is not None:
        r -= p.source_cell
    return r
