"""CSV emission. Floats are written with 17 significant digits."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..mesh import Grid
from ..pnp import State
from .studies import FIELDS, ConvergenceReport


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return f"{value:.16e}"


def _write(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], comment: str | None = None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\r\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def snapshot_header(m: int) -> list[str]:
    return ["x", *(f"c_{i + 1}" for i in range(m)), "psi"]


def write_snapshot(path, grid: Grid, state: State, seed: int | None = None) -> None:
    """Cell-center values ``x, c_1..c_m, psi``; a ``# rng=PCG64 seed=...`` line precedes random-data runs."""
    m = state.c.shape[0]
    rows = zip(grid.centers, *state.c, state.psi)
    _write(path, snapshot_header(m), rows, None if seed is None else f"rng=PCG64 seed={seed}")


def timeseries_header(m: int) -> list[str]:
    return ["t", "E_h", *(f"mass_{i + 1}" for i in range(m)), "min_c", "dpsi_inf"]


def write_timeseries(path, records: Sequence[dict], m: int) -> None:
    """``E_h`` is blank for Dirichlet runs, ``dpsi_inf`` blank at the initial row."""
    rows = ([r["t"], r["E_h"], *r["mass"], r["min_c"], r["dpsi_inf"]] for r in records)
    _write(path, timeseries_header(m), rows)


def convergence_header() -> list[str]:
    out = ["N"]
    for name in FIELDS:
        out += [f"err_{name}", f"ord_{name}"]
    return out


def write_convergence(path, report: ConvergenceReport) -> None:
    rows = []
    for row in report.rows:
        vals = [row.n_cells]
        for name in FIELDS:
            vals += [row.errors[name], None if row.orders is None else row.orders[name]]
        rows.append(vals)
    _write(path, convergence_header(), rows)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    _write(path, header, rows)


def read_csv(path) -> tuple[list[str], list[list[str]], list[str]]:
    """``(header, rows, comments)`` of a file written here."""
    comments, lines = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            (comments if line.startswith("#") else lines).append(line)
    parsed = list(csv.reader(lines))
    return parsed[0], parsed[1:], [c[1:].strip() for c in comments]
