"""Tridiagonal systems: Thomas elimination and M-matrix structure checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError


class SingularSystemError(ArithmeticError):
    """A zero pivot was met during elimination."""


@dataclass
class TridiagonalSystem:
    """``lower[k]`` couples row ``k+1`` to column ``k``; ``upper[k]`` couples row ``k`` to ``k+1``."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        for name in ("lower", "diag", "upper", "rhs"):
            arr = getattr(self, name)
            if not (isinstance(arr, np.ndarray) and arr.dtype == np.float64 and arr.flags.c_contiguous):
                setattr(self, name, np.ascontiguousarray(arr, dtype=float))
        n = self.diag.size
        if self.lower.size != n - 1 or self.upper.size != n - 1 or self.rhs.size != n:
            raise ConfigurationError(
                f"inconsistent tridiagonal sizes: lower={self.lower.size}, diag={n}, "
                f"upper={self.upper.size}, rhs={self.rhs.size}")

    @property
    def size(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower * x[:-1]
        y[:-1] += self.upper * x[1:]
        return y


@njit(cache=True)
def _thomas(lower, diag, upper, rhs):
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    piv = diag[0]
    if piv == 0.0:
        return d, 0
    c[0] = upper[0] / piv if n > 1 else 0.0
    d[0] = rhs[0] / piv
    for k in range(1, n):
        piv = diag[k] - lower[k - 1] * c[k - 1]
        if piv == 0.0:
            return d, k
        if k < n - 1:
            c[k] = upper[k] / piv
        d[k] = (rhs[k] - lower[k - 1] * d[k - 1]) / piv
    for k in range(n - 2, -1, -1):
        d[k] -= c[k] * d[k + 1]
    return d, -1


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """Solve ``system`` by Gaussian elimination without pivoting.

    Stable for the strictly diagonally dominant matrices produced by the
    transport and Poisson assemblies.

    Raises
    ------
    SingularSystemError
        If a zero pivot occurs.
    """
    x, bad = _thomas(system.lower, system.diag, system.upper, system.rhs)
    if bad >= 0:
        raise SingularSystemError(f"zero pivot in row {bad}")
    return x


def verify_m_structure(system: TridiagonalSystem, strict: bool = True) -> bool:
    """Check the sign and dominance pattern of a nonsingular M-matrix.

    With ``strict=True`` (default): diag > 0, off-diagonals <= 0 and every row
    strictly diagonally dominant. With ``strict=False`` the weaker irreducible
    criterion is used instead: rows weakly dominant, at least one row strict,
    and every off-diagonal nonzero (a tridiagonal matrix is then irreducible).
    Both imply a nonnegative inverse.
    """
    off = np.zeros(system.size)
    off[1:] += np.abs(system.lower)
    off[:-1] += np.abs(system.upper)
    signs = bool(np.all(system.diag > 0) and np.all(system.lower <= 0) and np.all(system.upper <= 0))
    if strict:
        return signs and bool(np.all(system.diag > off))
    return (signs
            and bool(np.all(system.diag >= off))
            and bool(np.any(system.diag > off))
            and bool(np.all(system.lower < 0) and np.all(system.upper < 0)))
