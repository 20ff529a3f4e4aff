"""Turn a :class:`ScenarioConfig` into a problem statement and run it."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import pnp
from ..mesh import ChannelGeometry, PiecewiseCoefficient, build_grid, channel_area, channel_charge
from ..pnp import SpeciesSpec, State, SystemSpec
from ..transport import FluxOrder
from .config import ConfigError, ScenarioConfig
from .scenarios import bump_initial, manufactured_area, manufactured_example, random_initial

logger = logging.getLogger(__name__)


def _diffusion(cfg: ScenarioConfig, value: float) -> PiecewiseCoefficient:
    if cfg.physics.diffusion_profile == "quartic":
        return PiecewiseCoefficient.smooth(lambda x: value * (1.0 - 0.9 * np.exp(-x**4)))
    return PiecewiseCoefficient.constant(value)


def _area(cfg: ScenarioConfig):
    kind = cfg.physics.area_profile
    if kind == "channel":
        return channel_area(geometry(cfg))
    if kind == "quadratic":
        return PiecewiseCoefficient.smooth(lambda x: 1.0 + x**2)
    if kind == "manufactured":
        return PiecewiseCoefficient.smooth(manufactured_area)
    return PiecewiseCoefficient.constant(cfg.physics.area_value)


def _rho(cfg: ScenarioConfig):
    kind = cfg.physics.rho_profile
    if kind == "channel":
        return channel_charge(cfg.geometry.Q0, geometry(cfg))
    if kind == "quartic":
        amp = cfg.physics.rho_amplitude
        return PiecewiseCoefficient.smooth(lambda x: amp * np.exp(-x**4))
    return PiecewiseCoefficient.constant(0.0)


def geometry(cfg: ScenarioConfig) -> ChannelGeometry:
    g = cfg.geometry
    if cfg.grid.lo != 0.0 or cfg.grid.hi != 1.0:
        raise ConfigError("the channel geometry lives on [0, 1]", field="grid.lo")
    return ChannelGeometry(g.r_f, g.r_c, g.l_c)


def build_spec(cfg: ScenarioConfig) -> SystemSpec:
    """Problem statement for ``cfg``.

    The manufactured scenario (``ex4_1``) is fixed apart from ``grid.n_cells``,
    ``time.tau`` (null means ``h^2``) and ``numerics.flux_order``.
    """
    order = FluxOrder(cfg.numerics.flux_order)
    if cfg.scenario == "ex4_1":
        return manufactured_example().spec(cfg.grid.n_cells, order, cfg.time.tau)
    ph = cfg.physics
    species = [SpeciesSpec(z, _diffusion(cfg, d), cl, cr)
               for z, d, cl, cr in zip(ph.valences, ph.diffusion, ph.c_left, ph.c_right)]
    return SystemSpec(
        build_grid(cfg.grid.n_cells, cfg.grid.lo, cfg.grid.hi),
        species,
        epsilon=ph.epsilon,
        tau=cfg.time.tau,
        area=_area(cfg),
        rho=_rho(cfg),
        bc_kind=ph.bc_kind,
        V=ph.V,
        eta=ph.eta,
        psi_minus=ph.psi_minus,
        psi_plus=ph.psi_plus,
        flux_order=order,
    )


def initial_densities(cfg: ScenarioConfig, spec: SystemSpec) -> list:
    kind = cfg.numerics.initial_data
    ph = cfg.physics
    lo, hi = spec.grid.lo, spec.grid.hi
    if kind == "manufactured":
        if cfg.scenario != "ex4_1":
            raise ConfigError("manufactured data belongs to scenario ex4_1", field="numerics.initial_data")
        return manufactured_example().initial_densities()
    if kind == "linear":
        return [lambda x, a=a, b=b: a + (b - a) * (x - lo) / (hi - lo)
                for a, b in zip(ph.c_left, ph.c_right)]
    if kind == "bumps":
        if spec.m != 3:
            raise ConfigError("bump data is defined for three species", field="numerics.initial_data")
        return bump_initial()
    if kind == "random":
        return random_initial(spec.m, spec.grid.n_cells, cfg.numerics.seed)
    return [lambda x, a=a: np.full_like(x, a) for a in ph.c_left]


@dataclass
class RunResult:
    config: ScenarioConfig
    spec: SystemSpec
    state: State
    steps: int
    converged: bool | None  # None when no steady tolerance was requested
    dpsi: float
    wall_time: float
    timeseries: list[dict] = field(default_factory=list)

    @property
    def seed(self) -> int | None:
        return self.config.numerics.seed if self.config.numerics.initial_data == "random" else None


def _record(spec: SystemSpec, state: State, dpsi: float) -> dict:
    return {
        "t": state.t,
        "E_h": None if spec.is_dirichlet else pnp.discrete_energy(spec, state),
        "mass": [pnp.total_mass(spec, state, i) for i in range(spec.m)],
        "min_c": state.min_density,
        "dpsi_inf": dpsi,
    }


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Run to ``time.t_end``, stopping early once ``time.steady_tol`` is met (if set)."""
    spec = build_spec(cfg)
    state = pnp.initialize(spec, initial_densities(cfg, spec))
    tol = cfg.time.steady_tol
    if cfg.time.t_end is not None:
        n_max = int(round(cfg.time.t_end / spec.tau))
    else:
        n_max = cfg.time.max_steps
    every = cfg.time.record_every
    series = [_record(spec, state, math.nan)]
    start = time.perf_counter()
    dpsi = math.nan
    converged = None if tol is None else False
    n = 0
    while n < n_max:
        new = pnp.step(spec, state)
        n += 1
        dpsi = pnp.psi_change(state, new)
        state = new
        done = tol is not None and dpsi <= tol
        if done:
            converged = True
        if n % every == 0 or done or n == n_max:
            series.append(_record(spec, state, dpsi))
        if done:
            break
    wall = time.perf_counter() - start
    if converged is False:
        logger.warning("%s: no steady state within %d steps (|dpsi| = %.3e)", cfg.scenario, n, dpsi)
    return RunResult(cfg, spec, state, n, converged, dpsi, wall, series)
