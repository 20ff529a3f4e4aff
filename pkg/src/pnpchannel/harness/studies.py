"""Convergence studies, steady-state runs and current-voltage sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .. import pnp
from ..errors import ConfigurationError
from ..mesh import PiecewiseCoefficient, cell_averages
from ..pnp import State, SystemSpec
from ..transport import FluxOrder
from .scenarios import manufactured_example

logger = logging.getLogger(__name__)

FIELDS = ("c1", "c2", "psi")


@dataclass
class ConvergenceRow:
    n_cells: int
    errors: dict[str, float]
    orders: dict[str, float] | None = None


@dataclass
class ConvergenceReport:
    flux_order: FluxOrder
    rows: list[ConvergenceRow] = field(default_factory=list)

    def error(self, n_cells: int, name: str) -> float:
        return self._row(n_cells).errors[name]

    def order(self, n_cells: int, name: str) -> float:
        row = self._row(n_cells)
        if row.orders is None:
            raise KeyError(f"no order for the coarsest resolution N={n_cells}")
        return row.orders[name]

    def _row(self, n_cells: int) -> ConvergenceRow:
        for row in self.rows:
            if row.n_cells == n_cells:
                return row
        raise KeyError(n_cells)


def manufactured_errors(n_cells: int, flux_order: FluxOrder = FluxOrder.FIRST, t_end: float = 1.0,
                        reference: str = "point") -> dict[str, float]:
    """Max-norm errors of the manufactured problem at ``t_end`` with ``tau = h^2``.

    Densities are taken at ``t_end``. The potential compared is the one that
    drove the final step (solved from the densities one step earlier), and
    ``reference`` selects exact values at cell centers (``"point"``) or exact
    cell averages (``"average"``).
    """
    ex = manufactured_example()
    spec = ex.spec(n_cells, flux_order)
    n_steps = int(round(t_end / spec.tau))
    state = pnp.initialize(spec, ex.initial_densities())
    driving = state
    for _ in range(n_steps):
        driving = state
        state = pnp.step(spec, state)
    x = spec.grid.centers
    t = n_steps * spec.tau
    if reference == "point":
        ref = [f(x, t) for f in ex.exact]
    elif reference == "average":
        ref = [cell_averages(PiecewiseCoefficient.smooth(lambda y, f=f: f(y, t)), spec.grid)
               for f in ex.exact]
    else:
        raise ConfigurationError(f"reference must be 'point' or 'average', got {reference!r}")
    return {
        "c1": float(np.max(np.abs(state.c[0] - ref[0]))),
        "c2": float(np.max(np.abs(state.c[1] - ref[1]))),
        "psi": float(np.max(np.abs(driving.psi - ref[2]))),
    }


def convergence_study(ns: Sequence[int], flux_order: FluxOrder = FluxOrder.FIRST, t_end: float = 1.0,
                      reference: str = "point") -> ConvergenceReport:
    ns = [int(n) for n in ns]
    if any(n < 4 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigurationError(f"resolutions must be strictly increasing and >= 4, got {ns}")
    report = ConvergenceReport(flux_order)
    prev = None
    for n in ns:
        errs = manufactured_errors(n, flux_order, t_end, reference)
        orders = None
        if prev is not None:
            ratio = n / prev.n_cells
            orders = {k: math.log(prev.errors[k] / errs[k]) / math.log(ratio) for k in FIELDS}
        row = ConvergenceRow(n, errs, orders)
        logger.info("N=%d errors=%s orders=%s", n, errs, orders)
        report.rows.append(row)
        prev = row
    return report


@dataclass
class IVPoint:
    V: float
    current: float
    steps: int
    converged: bool
    spread: float  # (max - min) of the interior current profile


def steady_current(spec: SystemSpec, state: State) -> tuple[float, float]:
    prof = pnp.current_profile(spec, state)
    return float(prof.mean()), float(prof.max() - prof.min())


def iv_sweep(template: SystemSpec, voltages: Sequence[float], initial, tol: float = 1e-6,
             max_steps: int = 200_000) -> list[IVPoint]:
    """Steady mean current for each applied voltage; unconverged points are flagged, not fatal."""
    out = []
    for v in voltages:
        spec = replace(template, V=float(v))
        run = pnp.run_to_steady(spec, pnp.initialize(spec, initial), tol, max_steps)
        if not run.converged:
            logger.warning("V=%g did not reach a steady state in %d steps", v, max_steps)
        current, spread = steady_current(spec, run.state)
        out.append(IVPoint(float(v), current, run.steps, run.converged, spread))
    return out


def linear_fit_r2(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through ``(x, y)``: ``(slope, intercept, R^2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
