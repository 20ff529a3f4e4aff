"""JSON scenario configuration: defaults per scenario, strict validation, round-trip dump."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from ..errors import ConfigurationError

SCENARIOS = ("ex4_1", "ex4_2", "ex4_3", "ex4_4", "ex4_5", "custom")
FLUX_ORDERS = ("zeroth", "first", "second")
BC_KINDS = ("dirichlet", "zero_flux_robin")
AREA_PROFILES = ("channel", "quadratic", "manufactured", "constant")
RHO_PROFILES = ("channel", "quartic", "zero")
DIFFUSION_PROFILES = ("constant", "quartic")
INITIAL_DATA = ("linear", "bumps", "random", "manufactured", "reservoir")


class ConfigError(ConfigurationError):
    """Invalid configuration; ``field`` is the dotted path, ``line`` the source line if known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field `{field}`")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class GridSection:
    n_cells: int | None = None
    lo: float = 0.0
    hi: float = 1.0


@dataclass(frozen=True)
class TimeSection:
    tau: float | None = None
    t_end: float | None = None
    steady_tol: float | None = None
    max_steps: int = 200_000
    record_every: int = 1


@dataclass(frozen=True)
class PhysicsSection:
    epsilon: float | None = None
    valences: tuple[float, ...] | None = None
    diffusion: tuple[float, ...] | None = None
    diffusion_profile: str = "constant"
    c_left: tuple[float, ...] | None = None
    c_right: tuple[float, ...] | None = None
    bc_kind: str = "dirichlet"
    V: float = 0.0
    eta: float = 1.0
    psi_minus: float = 0.0
    psi_plus: float = 0.0
    area_profile: str = "constant"
    area_value: float = 1.0
    rho_profile: str = "zero"
    rho_amplitude: float = 0.0


@dataclass(frozen=True)
class GeometrySection:
    r_f: float = 20.0
    r_c: float = 0.2
    l_c: float = 0.2
    Q0: float = 0.0


@dataclass(frozen=True)
class NumericsSection:
    flux_order: str = "first"
    seed: int = 1
    initial_data: str = "reservoir"


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    snapshot: str = "snapshot.csv"
    timeseries: str = "timeseries.csv"


SECTIONS = {
    "grid": GridSection,
    "time": TimeSection,
    "physics": PhysicsSection,
    "geometry": GeometrySection,
    "numerics": NumericsSection,
    "output": OutputSection,
}

CHOICES = {
    ("numerics", "flux_order"): FLUX_ORDERS,
    ("numerics", "initial_data"): INITIAL_DATA,
    ("physics", "bc_kind"): BC_KINDS,
    ("physics", "area_profile"): AREA_PROFILES,
    ("physics", "rho_profile"): RHO_PROFILES,
    ("physics", "diffusion_profile"): DIFFUSION_PROFILES,
}

REQUIRED = {
    "grid": ("n_cells",),
    "time": ("tau",),
    "physics": ("epsilon", "valences", "diffusion", "c_left", "c_right"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    grid: GridSection = field(default_factory=GridSection)
    time: TimeSection = field(default_factory=TimeSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    numerics: NumericsSection = field(default_factory=NumericsSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for sec in out.values():
            if isinstance(sec, dict):
                for k, v in sec.items():
                    if isinstance(v, tuple):
                        sec[k] = list(v)
        return out

    def override(self, dotted: str, value: Any) -> "ScenarioConfig":
        """Copy with one ``section.key`` replaced and the result re-validated."""
        return self.with_overrides({dotted: value})

    def with_overrides(self, changes: dict[str, Any]) -> "ScenarioConfig":
        """Copy with several ``section.key`` fields replaced, validated once at the end."""
        data = self.to_dict()
        for dotted, value in changes.items():
            if dotted == "scenario":
                raise ConfigError("the scenario id cannot be overridden", field=dotted)
            try:
                section, key = dotted.split(".")
            except ValueError:
                raise ConfigError("overrides must look like section.key", field=dotted) from None
            if section not in SECTIONS:
                raise ConfigError(f"unknown section; valid: {', '.join(SECTIONS)}", field=section)
            data[section][key] = value
        return from_dict(data, defaults=False)


_CHANNEL_PHYSICS = dict(
    epsilon=5e-5, valences=(1.0, -1.0), diffusion=(1.0, 1.0), c_left=(0.5, 0.5),
    c_right=(0.4, 0.4), bc_kind="dirichlet", V=0.5, area_profile="channel",
)
_WELL_PHYSICS = dict(
    epsilon=0.1, valences=(2.0, -3.0, 1.0), diffusion=(20.0, 20.0, 20.0),
    diffusion_profile="quartic", c_left=(0.5, 0.5, 0.5), c_right=(0.5, 0.5, 0.5),
    V=0.0, area_profile="quadratic", rho_profile="quartic", rho_amplitude=1.0,
)

DEFAULTS: dict[str, dict[str, dict[str, Any]]] = {
    "ex4_1": dict(
        grid=dict(n_cells=40),
        time=dict(tau=None, t_end=1.0),
        physics=dict(epsilon=1.0, valences=(1.0, -1.0), diffusion=(1.0, 1.0), c_left=(0.0, 0.0),
                     c_right=(0.0, 0.0), area_profile="manufactured"),
        numerics=dict(initial_data="manufactured"),
    ),
    "ex4_2": dict(
        grid=dict(n_cells=100),
        time=dict(tau=5e-5, steady_tol=1e-6),
        physics=dict(_CHANNEL_PHYSICS, rho_profile="channel"),
        geometry=dict(r_f=20.0, r_c=1 / 3, l_c=1 / 3, Q0=0.2),
        numerics=dict(initial_data="linear"),
    ),
    "ex4_3": dict(
        grid=dict(n_cells=100),
        time=dict(tau=5e-5, steady_tol=1e-6),
        physics=dict(_CHANNEL_PHYSICS, rho_profile="zero"),
        geometry=dict(r_f=20.0, r_c=1 / 3, l_c=1 / 3, Q0=0.0),
        numerics=dict(initial_data="linear"),
    ),
    "ex4_4": dict(
        grid=dict(n_cells=200, lo=-10.0, hi=10.0),
        time=dict(tau=1e-3, steady_tol=1e-7),
        physics=dict(_WELL_PHYSICS),
        numerics=dict(initial_data="bumps"),
    ),
    "ex4_5": dict(
        grid=dict(n_cells=200, lo=-10.0, hi=10.0),
        time=dict(tau=1e-3, t_end=15.0, record_every=10),
        physics=dict(_WELL_PHYSICS, bc_kind="zero_flux_robin", eta=0.1, psi_minus=-0.1, psi_plus=0.1),
        numerics=dict(initial_data="bumps"),
    ),
    "custom": {},
}


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _coerce(section: str, key: str, value: Any, annotation: str, text: str | None):
    path = f"{section}.{key}"

    def fail(msg):
        raise ConfigError(msg, field=path, line=_line_of(text, key))

    nullable = "None" in annotation
    if value is None:
        if nullable:
            return None
        fail("must not be null")
    if annotation.startswith("tuple"):
        if not isinstance(value, (list, tuple)) or not value:
            fail("expected a non-empty list of numbers")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            fail("expected a list of numbers")
        return tuple(float(v) for v in value)
    if annotation.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            fail(f"expected an integer, got {value!r}")
        return value
    if annotation.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail(f"expected a number, got {value!r}")
        return float(value)
    if annotation.startswith("str"):
        if not isinstance(value, str):
            fail(f"expected a string, got {value!r}")
        choices = CHOICES.get((section, key))
        if choices is not None and value not in choices:
            fail(f"{value!r} is not one of {', '.join(choices)}")
        return value
    return value  # pragma: no cover


def from_dict(data: dict[str, Any], text: str | None = None, defaults: bool = True) -> ScenarioConfig:
    """Validate ``data`` and merge it over the scenario defaults."""
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    unknown = set(data) - {"scenario", *SECTIONS}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key; valid: scenario, {', '.join(SECTIONS)}",
                          field=key, line=_line_of(text, key))
    scenario = data.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario id {scenario!r}; valid ids: {', '.join(SCENARIOS)}",
                          field="scenario", line=_line_of(text, "scenario"))
    built = {}
    for name, cls in SECTIONS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError("expected an object", field=name, line=_line_of(text, name))
        merged = dict(DEFAULTS[scenario].get(name, {})) if defaults else {}
        hints = {f.name: str(f.type) for f in fields(cls)}
        for key, value in raw.items():
            if key not in hints:
                raise ConfigError(f"unknown key in section `{name}`; valid: {', '.join(hints)}",
                                  field=f"{name}.{key}", line=_line_of(text, key))
            merged[key] = value
        kwargs = {k: _coerce(name, k, v, hints[k], text) for k, v in merged.items()}
        built[name] = cls(**kwargs)
    cfg = ScenarioConfig(scenario, **built)
    _check_consistency(cfg, text)
    return cfg


def _check_consistency(cfg: ScenarioConfig, text: str | None) -> None:
    for section, keys in REQUIRED.items():
        sec = getattr(cfg, section)
        for key in keys:
            if getattr(sec, key) is None and not (cfg.scenario == "ex4_1" and key == "tau"):
                raise ConfigError("missing required field", field=f"{section}.{key}",
                                  line=_line_of(text, key))
    ph = cfg.physics
    m = len(ph.valences)
    for key in ("diffusion", "c_left", "c_right"):
        if len(getattr(ph, key)) != m:
            raise ConfigError(f"needs {m} entries (one per valence)", field=f"physics.{key}",
                              line=_line_of(text, key))
    if cfg.time.t_end is None and cfg.time.steady_tol is None:
        raise ConfigError("set time.t_end or time.steady_tol", field="time.t_end")
    if cfg.grid.n_cells < 2:
        raise ConfigError("needs at least 2 cells", field="grid.n_cells", line=_line_of(text, "n_cells"))
    if cfg.time.record_every < 1:
        raise ConfigError("must be >= 1", field="time.record_every")


def loads_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return from_dict(data, text)


def load_config(path: str | Path) -> ScenarioConfig:
    return loads_config(Path(path).read_text(encoding="utf-8"))


def dumps_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2) + "\n"


def dump_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(dumps_config(cfg), encoding="utf-8")


def default_config(scenario: str) -> ScenarioConfig:
    return from_dict({"scenario": scenario}) if scenario != "custom" else _missing_custom()


def _missing_custom():
    raise ConfigError("the custom scenario has no defaults; supply physics, grid and time",
                      field="scenario")


__all__ = ["ConfigError", "ScenarioConfig", "SCENARIOS", "default_config", "dump_config",
           "dumps_config", "from_dict", "load_config", "loads_config", "replace"]
