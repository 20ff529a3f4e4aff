"""Built-in scenarios: manufactured solution, channel geometry runs, variable diffusion runs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..mesh import ChannelGeometry, PiecewiseCoefficient, build_grid, channel_area, channel_charge
from ..pnp import DIRICHLET, ZERO_FLUX_ROBIN, SpeciesSpec, SystemSpec
from ..transport import FluxOrder


# --- manufactured solution on [0, 1] -----------------------------------------

def manufactured_area(x):
    return (5.0 - 4.0 * x) ** 2


def f1(x, t):
    return ((4 * x**4 - 9 * x**3 + 53 * x**2 - 54 * x + 10) / (4 * x - 5) * np.exp(-t)
            + (40 * x**7 - 71 * x**6 + 30 * x**5) / 20 * np.exp(-2 * t))


def f2(x, t):
    return ((4 * x**5 - 13 * x**4 + 94 * x**3 - 161 * x**2 + 84 * x - 10) / (5 - 4 * x) * np.exp(-t)
            + (22 * x**8 - 60 * x**7 + 53 * x**6 - 15 * x**5) / 10 * np.exp(-2 * t))


def f3(x, t):
    return -2.0 * x**4 / 5.0 * np.exp(-t)


def exact_c1(x, t):
    return x**2 * (1 - x) * np.exp(-t)


def exact_c2(x, t):
    return x**2 * (1 - x) ** 2 * np.exp(-t)


def exact_psi(x, t):
    return -x**5 * (3 - 2 * x) / 60 * np.exp(-t)


@dataclass(frozen=True)
class ManufacturedExample:
    """Two-species problem with closed-form solution and matching sources."""

    sources: Callable
    poisson_source: Callable
    exact: tuple[Callable, Callable, Callable]

    def spec(self, n_cells: int, flux_order: FluxOrder = FluxOrder.FIRST,
             tau: float | None = None) -> SystemSpec:
        grid = build_grid(n_cells, 0.0, 1.0)
        return SystemSpec(
            grid,
            [SpeciesSpec(1.0, 1.0), SpeciesSpec(-1.0, 1.0)],
            epsilon=1.0,
            tau=grid.h**2 if tau is None else tau,
            area=manufactured_area,
            rho=0.0,
            bc_kind=DIRICHLET,
            psi_l=0.0,
            V=lambda t: float(exact_psi(1.0, t)),
            flux_order=flux_order,
            sources=self.sources,
            poisson_source=self.poisson_source,
        )

    def initial_densities(self):
        return [lambda x: exact_c1(x, 0.0), lambda x: exact_c2(x, 0.0)]


def manufactured_example() -> ManufacturedExample:
    return ManufacturedExample(
        sources=lambda x, t: np.array([f1(x, t), f2(x, t)]),
        poisson_source=f3,
        exact=(exact_c1, exact_c2, exact_psi),
    )


# --- channel with bath funnels on [0, 1] --------------------------------------

def channel_spec(r_c: float, l_c: float, q0: float, *, r_f: float = 20.0, V: float = 0.5,
                 n_cells: int = 100, tau: float = 5e-5, epsilon: float = 5e-5,
                 c_left: float = 0.5, c_right: float = 0.4,
                 flux_order: FluxOrder = FluxOrder.FIRST) -> SystemSpec:
    """Two monovalent species (z = +1, -1, D = 1) in a funnel-channel-funnel geometry."""
    geom = ChannelGeometry(r_f, r_c, l_c)
    return SystemSpec(
        build_grid(n_cells, 0.0, 1.0),
        [SpeciesSpec(1.0, 1.0, c_left, c_right), SpeciesSpec(-1.0, 1.0, c_left, c_right)],
        epsilon=epsilon,
        tau=tau,
        area=channel_area(geom),
        rho=channel_charge(q0, geom),
        bc_kind=DIRICHLET,
        V=V,
        flux_order=flux_order,
    )


def linear_initial(x):
    return 0.5 - 0.1 * x


# --- variable diffusion, quadratic area on [-10, 10] --------------------------

QUARTIC_VALENCES = (2.0, -3.0, 1.0)


def quartic_diffusion(x):
    return 20.0 * (1.0 - 0.9 * np.exp(-x**4))


def quadratic_area(x):
    return 1.0 + x**2


def quartic_charge(amplitude: float) -> PiecewiseCoefficient:
    return PiecewiseCoefficient.smooth(lambda x: amplitude * np.exp(-x**4))


def well_spec(C: float = 1.0, *, bc_kind: str = DIRICHLET, n_cells: int = 200, tau: float = 1e-3,
              epsilon: float = 0.1, eta: float = 0.1, psi_minus: float = -0.1,
              psi_plus: float = 0.1, reservoir: float = 0.5) -> SystemSpec:
    """Three species with ``D_i(x) = 20(1 - 0.9 exp(-x^4))``, ``A = 1 + x^2``, ``rho = C exp(-x^4)``."""
    diffusion = PiecewiseCoefficient.smooth(quartic_diffusion)
    return SystemSpec(
        build_grid(n_cells, -10.0, 10.0),
        [SpeciesSpec(z, diffusion, reservoir, reservoir) for z in QUARTIC_VALENCES],
        epsilon=epsilon,
        tau=tau,
        area=quadratic_area,
        rho=quartic_charge(C),
        bc_kind=bc_kind,
        V=0.0,
        eta=eta,
        psi_minus=psi_minus,
        psi_plus=psi_plus,
    )


def bump_initial():
    """Initial densities displaced by quartic bumps at x = -4, 0, 4."""
    return [
        lambda x: 0.5 - 0.5 * np.exp(-(x + 4.0) ** 4),
        lambda x: 0.5 + 2.0 * np.exp(-x**4),
        lambda x: 0.5 + np.exp(-(x - 4.0) ** 4),
    ]


def random_initial(m: int, n_cells: int, seed: int = 1) -> list[np.ndarray]:
    """Cell values drawn uniformly from (0, 1) with a PCG64 generator."""
    rng = np.random.Generator(np.random.PCG64(seed))
    vals = rng.uniform(0.0, 1.0, size=(m, n_cells))
    # uniform() samples [0, 1); keep the open interval
    vals[vals == 0.0] = np.nextafter(0.0, 1.0)
    return list(vals)


__all__ = [
    "DIRICHLET",
    "ZERO_FLUX_ROBIN",
    "ManufacturedExample",
    "bump_initial",
    "channel_spec",
    "linear_initial",
    "manufactured_example",
    "random_initial",
    "well_spec",
]
