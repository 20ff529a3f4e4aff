"""Uniform finite-volume grids and piecewise coefficient functions.

Cell indices are 0-based throughout: cell ``j`` spans
``[interfaces[j], interfaces[j + 1]]`` and interface ``k`` sits at
``lo + k * h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError

# 5-point Gauss-Legendre on [-1, 1]; exact for polynomials of degree <= 9
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)

Segment = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Grid:
    """Uniform partition of ``[lo, hi]`` into ``n_cells`` cells."""

    n_cells: int
    lo: float
    hi: float
    centers: np.ndarray = field(init=False, repr=False, compare=False)
    interfaces: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ConfigurationError(f"n_cells must be an integer >= 2, got {self.n_cells!r}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise ConfigurationError(f"empty or invalid domain [{self.lo}, {self.hi}]")
        k = np.arange(self.n_cells + 1, dtype=float)
        faces = self.lo + k * self.h
        faces[-1] = self.hi
        faces.setflags(write=False)
        centers = self.lo + (k[:-1] + 0.5) * self.h
        centers.setflags(write=False)
        object.__setattr__(self, "interfaces", faces)
        object.__setattr__(self, "centers", centers)

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / self.n_cells

    @property
    def length(self) -> float:
        return self.hi - self.lo


def build_grid(n_cells: int, lo: float = 0.0, hi: float = 1.0) -> Grid:
    return Grid(n_cells, float(lo), float(hi))


class PiecewiseCoefficient:
    """Scalar function of ``x`` defined segment-wise between sorted breakpoints.

    Parameters
    ----------
    breakpoints : sequence of float
        Strictly increasing interior breakpoints ``b_0 < b_1 < ...``.
    segments : sequence of callables
        ``len(breakpoints) + 1`` vectorised evaluators; segment ``k`` covers
        ``(b_{k-1}, b_k)``.
    ties : sequence of {"left", "right"}, optional
        Which neighbouring segment owns the point ``x == b_k``. Defaults to
        ``"left"`` for every breakpoint.
    """

    def __init__(self, breakpoints: Sequence[float], segments: Sequence[Segment],
                 ties: Sequence[str] | None = None):
        bps = np.asarray(breakpoints, dtype=float)
        if bps.ndim != 1 or np.any(np.diff(bps) <= 0):
            raise ConfigurationError("breakpoints must be strictly increasing")
        if len(segments) != len(bps) + 1:
            raise ConfigurationError(
                f"need {len(bps) + 1} segments for {len(bps)} breakpoints, got {len(segments)}")
        ties = tuple(ties) if ties is not None else ("left",) * len(bps)
        if len(ties) != len(bps) or any(t not in ("left", "right") for t in ties):
            raise ConfigurationError("ties must give 'left' or 'right' per breakpoint")
        self.breakpoints = bps
        self.segments = tuple(segments)
        self.ties = ties

    @classmethod
    def constant(cls, value: float) -> "PiecewiseCoefficient":
        value = float(value)
        return cls([], [lambda x: np.full_like(np.asarray(x, dtype=float), value)])

    @classmethod
    def smooth(cls, func: Segment) -> "PiecewiseCoefficient":
        return cls([], [func])

    def segment_index(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="left")
        for k, tie in enumerate(self.ties):
            if tie == "right":
                idx = np.where(x == self.breakpoints[k], k + 1, idx)
        return idx

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xs = np.atleast_1d(x)
        idx = self.segment_index(xs)
        out = np.empty_like(xs)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = np.broadcast_to(seg(xs[mask]), (int(mask.sum()),))
        return float(out[0]) if scalar else out

    def segment_integral(self, k: int, a: float, b: float) -> float:
        """Gauss-Legendre integral of segment ``k`` over ``[a, b]``."""
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        vals = np.broadcast_to(self.segments[k](mid + half * _GL_NODES), _GL_NODES.shape)
        return half * float(np.dot(_GL_WEIGHTS, vals))

    def integrate(self, a: float, b: float) -> float:
        """Integral over ``[a, b]``, split at every breakpoint inside the interval."""
        inner = self.breakpoints[(self.breakpoints > a) & (self.breakpoints < b)]
        edges = np.concatenate(([a], inner, [b]))
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            # open sub-interval lies in exactly one segment
            k = int(np.searchsorted(self.breakpoints, 0.5 * (lo + hi)))
            total += self.segment_integral(k, lo, hi)
        return total


def cell_average(f: PiecewiseCoefficient, grid: Grid, j: int) -> float:
    """``(1/h) * integral of f over cell j`` (0-based)."""
    if not 0 <= j < grid.n_cells:
        raise IndexError(f"cell index {j} outside 0..{grid.n_cells - 1}")
    a, b = grid.interfaces[j], grid.interfaces[j + 1]
    return f.integrate(a, b) / (b - a)


def cell_averages(f: PiecewiseCoefficient, grid: Grid) -> np.ndarray:
    faces = grid.interfaces
    if len(f.breakpoints) == 0:
        # one vectorised pass for smooth coefficients
        mid = 0.5 * (faces[:-1] + faces[1:])
        half = 0.5 * (faces[1:] - faces[:-1])
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        vals = np.broadcast_to(f.segments[0](pts), pts.shape)
        return 0.5 * (vals @ _GL_WEIGHTS)
    return np.array([cell_average(f, grid, j) for j in range(grid.n_cells)])


@dataclass(frozen=True)
class ChannelGeometry:
    """Bath funnel / channel / bath funnel layout on ``[0, 1]``.

    The two baths have equal length ``l_b = (1 - l_c) / 2``.
    """

    r_f: float
    r_c: float
    l_c: float

    def __post_init__(self):
        if not 0 < self.r_c <= self.r_f:
            raise ConfigurationError(f"need 0 < r_c <= r_f, got r_c={self.r_c}, r_f={self.r_f}")
        if not 0 < self.l_c < 1:
            raise ConfigurationError(f"need 0 < l_c < 1, got {self.l_c}")

    @property
    def l_b(self) -> float:
        return 0.5 * (1.0 - self.l_c)

    @property
    def breakpoints(self) -> tuple[float, float]:
        return self.l_b, self.l_b + self.l_c


def channel_area(geom: ChannelGeometry) -> PiecewiseCoefficient:
    r_f, r_c, l_b = geom.r_f, geom.r_c, geom.l_b
    b0, b1 = geom.breakpoints
    # ramps written relative to their breakpoint so both limits there are exactly 2 r_c
    return PiecewiseCoefficient(
        geom.breakpoints,
        [
            lambda x: 2.0 * (r_c + (r_f - r_c) * ((b0 - x) / l_b)),
            lambda x: np.full_like(x, 2.0 * r_c),
            lambda x: 2.0 * (r_c + (r_f - r_c) * ((x - b1) / l_b)),
        ],
    )


def channel_charge(q0: float, geom: ChannelGeometry) -> PiecewiseCoefficient:
    q0 = float(q0)
    return PiecewiseCoefficient(
        geom.breakpoints,
        [np.zeros_like, lambda x: np.full_like(x, 2.0 * q0), np.zeros_like],
        ties=("left", "right"),
    )
