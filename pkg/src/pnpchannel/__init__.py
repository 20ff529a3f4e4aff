"""Positivity-preserving finite-volume solver for the reduced 1D Poisson-Nernst-Planck system."""

from .mesh import ChannelGeometry, Grid, PiecewiseCoefficient, build_grid, cell_average, cell_averages
from .linalg import SingularSystemError, TridiagonalSystem, thomas_solve, verify_m_structure
from .transport import BoundarySpec, FluxOrder, TransportProblem
from .poisson import ChargeDensity, PoissonProblem, solve_poisson
from .pnp import SpeciesSpec, State, SystemSpec

__all__ = [
    "BoundarySpec",
    "ChannelGeometry",
    "ChargeDensity",
    "FluxOrder",
    "Grid",
    "PiecewiseCoefficient",
    "PoissonProblem",
    "SingularSystemError",
    "SpeciesSpec",
    "State",
    "SystemSpec",
    "TransportProblem",
    "TridiagonalSystem",
    "build_grid",
    "cell_average",
    "cell_averages",
    "solve_poisson",
    "thomas_solve",
    "verify_m_structure",
]

__version__ = "0.1.0"
