"""Command-line interface: ``pnpchannel run | converge | iv | sweep``.

Every verb accepts ``--config`` (JSON file) or ``--scenario`` (built-in
defaults) plus field overrides. Results go to stdout as one JSON summary line;
``--out DIR`` additionally writes CSVs and the resolved config. Failures print
``{"error": ...}`` on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .. import pnp
from ..errors import ConfigurationError, DomainError
from ..linalg import SingularSystemError
from ..transport import FluxOrder
from . import io
from .config import ConfigError, ScenarioConfig, default_config, dump_config, load_config
from .runner import run_scenario
from .studies import convergence_study, linear_fit_r2

logger = logging.getLogger("pnpchannel")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(args) -> ScenarioConfig:
    """Config file or scenario defaults, then ``--set`` and shorthand overrides in that order."""
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = default_config(args.scenario)
    changes = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError("--set expects section.key=value", field=item)
        key, value = item.split("=", 1)
        changes[key.strip()] = _parse_value(value)
    shorthands = {"n_cells": "grid.n_cells", "tau": "time.tau",
                  "flux_order": "numerics.flux_order", "seed": "numerics.seed"}
    for attr, dotted in shorthands.items():
        value = getattr(args, attr)
        if value is not None:
            changes[dotted] = value
    if changes:
        cfg = cfg.with_overrides(changes)
    return cfg


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Order-stable map, in worker processes when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _steady_summary(cfg: ScenarioConfig) -> dict:
    res = run_scenario(cfg)
    prof = pnp.current_profile(res.spec, res.state)
    centers = res.spec.grid.centers
    mid = int(np.argmin(np.abs(centers - 0.5 * (res.spec.grid.lo + res.spec.grid.hi))))
    return {
        "steps": res.steps,
        "t_s": res.state.t,
        "converged": bool(res.converged),
        "current": float(prof.mean()),
        "spread": float(prof.max() - prof.min()),
        "mid_c1_minus_c2": float(res.state.c[0, mid] - res.state.c[1, mid]) if res.spec.m > 1 else float("nan"),
        "wall_time": res.wall_time,
    }


def cmd_run(args) -> dict:
    cfg = resolve_config(args)
    res = run_scenario(cfg)
    out = _out_dir(args)
    if out is not None:
        io.write_snapshot(out / cfg.output.snapshot, res.spec.grid, res.state, res.seed)
        io.write_timeseries(out / cfg.output.timeseries, res.timeseries, res.spec.m)
        dump_config(cfg, out / "config.json")
    return {
        "scenario": cfg.scenario,
        "steps": res.steps,
        "t": res.state.t,
        "converged": res.converged,
        "dpsi_inf": res.dpsi,
        "min_c": res.state.min_density,
        "wall_time": res.wall_time,
    }


def cmd_converge(args) -> dict:
    order = FluxOrder(args.flux_order or "first")
    report = convergence_study(args.ns, order, args.t_end, args.reference)
    out = _out_dir(args)
    if out is not None:
        io.write_convergence(out / "convergence.csv", report)
    return {"flux_order": order.value,
            "rows": [{"N": r.n_cells, "errors": r.errors, "orders": r.orders} for r in report.rows]}


def cmd_iv(args) -> dict:
    cfg = resolve_config(args)
    configs = [cfg.override("physics.V", v) for v in args.voltages]
    results = _map(_steady_summary, configs, args.jobs)
    slope, intercept, r2 = linear_fit_r2(args.voltages, [r["current"] for r in results])
    out = _out_dir(args)
    if out is not None:
        io.write_table(out / "iv.csv", ["V", "current", "steps", "converged", "spread"],
                       [[v, r["current"], r["steps"], r["converged"], r["spread"]]
                        for v, r in zip(args.voltages, results)])
        dump_config(cfg, out / "config.json")
    return {"points": [dict(V=v, **r) for v, r in zip(args.voltages, results)],
            "slope": slope, "intercept": intercept, "r2": r2}


def cmd_sweep(args) -> dict:
    cfg = resolve_config(args)
    g = cfg.geometry
    r_cs = args.r_c or [g.r_c]
    l_cs = args.l_c or [g.l_c]
    q0s = args.q0 or [g.Q0]
    grid = list(itertools.product(r_cs, l_cs, q0s))
    configs = [cfg.with_overrides({"geometry.r_c": r, "geometry.l_c": l, "geometry.Q0": q})
               for r, l, q in grid]
    results = _map(_steady_summary, configs, args.jobs)
    out = _out_dir(args)
    if out is not None:
        io.write_table(out / "sweep.csv",
                       ["r_c", "l_c", "Q0", "steps", "t_s", "converged", "current", "mid_c1_minus_c2"],
                       [[r, l, q, s["steps"], s["t_s"], s["converged"], s["current"], s["mid_c1_minus_c2"]]
                        for (r, l, q), s in zip(grid, results)])
        dump_config(cfg, out / "config.json")
    return {"points": [dict(r_c=r, l_c=l, Q0=q, **s) for (r, l, q), s in zip(grid, results)]}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnpchannel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, scenario_default):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", help="JSON config file")
        src.add_argument("--scenario", default=scenario_default,
                         help=f"built-in scenario id (default {scenario_default})")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one config field; VALUE is parsed as JSON when possible")
        p.add_argument("--n-cells", type=int)
        p.add_argument("--tau", type=float)
        p.add_argument("--flux-order", choices=[o.value for o in FluxOrder])
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="directory for CSVs and the resolved config")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for independent points")

    p = sub.add_parser("run", help="run one scenario")
    common(p, "ex4_2")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="manufactured-solution convergence table")
    common(p, "ex4_1")
    p.add_argument("--ns", type=_ints, default=[40, 80, 160, 320], help="comma-separated resolutions")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--reference", choices=["point", "average"], default="point")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("iv", help="steady current for a list of voltages")
    common(p, "ex4_2")
    p.add_argument("--voltages", type=_floats, default=[0.5, 1.0, 3.0, 5.0])
    p.set_defaults(func=cmd_iv)

    p = sub.add_parser("sweep", help="steady states over a geometry/charge grid")
    common(p, "ex4_2")
    p.add_argument("--r-c", type=_floats, help="channel radii")
    p.add_argument("--l-c", type=_floats, help="channel lengths")
    p.add_argument("--q0", type=_floats, help="permanent charge amplitudes")
    p.set_defaults(func=cmd_sweep)
    return parser


def _error_line(exc: BaseException) -> str:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["field"] = exc.field
        payload["line"] = exc.line
    return json.dumps(payload)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = args.func(args)
    except (ConfigurationError, DomainError, SingularSystemError, OverflowError, OSError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    print(json.dumps(summary, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
