"""Run configuration: flat ``section.key = value`` text files.

Lines starting with ``#`` and blank lines are ignored. Every key is optional;
an empty file gives the default optimal-treatment setup (SEIRS, default
parameter row, phase pi/2, order 0.993, equilibrium initial state, five-year
horizon). Angles accept expressions such as ``7*pi/5``.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .epimodels import Model, ModelParams, NoEndemicEquilibriumError, equilibrium
from .focp import ControlWeights, SweepSettings
from .frackernel import Grid, ParameterDomainError


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


_PI_EXPR = re.compile(r"^([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?$")


def _float(raw: str) -> float:
    s = raw.strip()
    m = _PI_EXPR.match(s)
    if m:
        num = m.group(1)
        coef = -1.0 if num == "-" else 1.0 if num in ("", "+") else float(num)
        den = float(m.group(2)) if m.group(2) else 1.0
        if den == 0:
            raise ValueError("division by zero")
        return coef * math.pi / den
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(raw: str) -> int:
    v = int(raw.strip())
    return v


def _bool(raw: str) -> bool:
    s = raw.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _str(raw: str) -> str:
    return raw.strip()


# key -> (converter, domain check or None, domain description)
_SCHEMA = {
    "model.type": (_str, lambda v: v in ("sirs", "seirs"), "one of sirs, seirs"),
    "model.mu": (_float, lambda v: v >= 0, ">= 0"),
    "model.nu": (_float, lambda v: v >= 0, ">= 0"),
    "model.gamma": (_float, lambda v: v >= 0, ">= 0"),
    "model.epsilon": (_float, lambda v: v >= 0, ">= 0"),
    "model.b0": (_float, lambda v: v >= 0, ">= 0"),
    "model.b1": (_float, lambda v: 0 <= v < 1, "in [0, 1)"),
    "model.c1": (_float, lambda v: 0 <= v < 1, "in [0, 1)"),
    "model.phi": (_float, None, ""),
    "model.alpha": (_float, lambda v: 0 < v <= 1, "in (0, 1]"),
    "initial.S": (_float, lambda v: v >= 0, ">= 0"),
    "initial.E": (_float, lambda v: v >= 0, ">= 0"),
    "initial.I": (_float, lambda v: v >= 0, ">= 0"),
    "initial.R": (_float, lambda v: v >= 0, ">= 0"),
    "grid.t0": (_float, None, ""),
    "grid.tf": (_float, None, ""),
    "grid.n_steps": (_int, lambda v: 1 <= v <= 1_000_000, "in [1, 1000000]"),
    "control.kappa1": (_float, lambda v: v >= 0, ">= 0"),
    "control.kappa2": (_float, lambda v: v > 0, "> 0"),
    "control.T_max": (_float, lambda v: v > 0, "> 0"),
    "control.C": (_float, lambda v: v >= 0, ">= 0"),
    "sweep.relaxation": (_float, lambda v: 0 < v <= 1, "in (0, 1]"),
    "sweep.tol": (_float, lambda v: v > 0, "> 0"),
    "sweep.max_iter": (_int, lambda v: v >= 1, ">= 1"),
    "calibration.data": (_str, None, ""),
    "calibration.population_scale": (_float, lambda v: v > 0, "> 0"),
    "calibration.alpha_min": (_float, lambda v: 0 < v <= 1, "in (0, 1]"),
    "calibration.alpha_step": (_float, lambda v: 0 < v < 1, "in (0, 1)"),
    "calibration.refine_tol": (_float, lambda v: 0 < v < 1, "in (0, 1)"),
    "calibration.nodes_per_month": (_int, lambda v: 1 <= v <= 10_000, "in [1, 10000]"),
    "calibration.rescale_initial": (_bool, None, ""),
    "calibration.relative_years": (_float, lambda v: v > 0, "> 0"),
    "calibration.months": (_int, lambda v: 2 <= v <= 10_000, "in [2, 10000]"),
    "calibration.synthetic_alpha": (_float, lambda v: 0 < v <= 1, "in (0, 1]"),
    "calibration.noise": (_float, lambda v: v >= 0, ">= 0"),
    "costeff.population_scale": (_float, lambda v: v > 0, "> 0"),
    "costeff.label": (_str, None, ""),
    "output.dir": (_str, None, ""),
}

KNOWN_KEYS = tuple(_SCHEMA)


@dataclass(frozen=True)
class CalibrationSettings:
    data: str | None = None
    population_scale: float = 10_000.0
    alpha_min: float = 0.5
    alpha_step: float = 0.005
    refine_tol: float = 5e-4
    nodes_per_month: int = 17
    rescale_initial: bool = False
    relative_years: float | None = None
    months: int = 35
    synthetic_alpha: float = 0.95
    noise: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    model: Model = Model.SEIRS
    params: ModelParams = ModelParams.seirs_default(phi=math.pi / 2, alpha=0.993)
    initial: tuple[float, ...] | None = None
    grid: Grid = Grid(0.0, 5.0, 1000)
    weights: ControlWeights = ControlWeights()
    sweep: SweepSettings = SweepSettings()
    calibration: CalibrationSettings = CalibrationSettings()
    costeff_population_scale: float | None = None
    label: str | None = None
    output_dir: str = "out"
    explicit_keys: frozenset = field(default=frozenset(), compare=False)

    def initial_state(self) -> tuple[float, ...]:
        if self.initial is not None:
            return self.initial
        return tuple(float(v) for v in equilibrium(self.model, self.params))

    @property
    def defaults_used(self) -> list[str]:
        return [k for k in KNOWN_KEYS if k not in self.explicit_keys]


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value' in {source}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown key")
        if key in raw:
            raise ConfigError(key, "given more than once")
        raw[key] = value
    return build_config(raw)


def parse_config(path=None) -> RunConfig:
    if path is None:
        return build_config({})
    p = Path(path)
    if not p.is_file():
        raise ConfigError("--config", f"file not found: {p}")
    return parse_config_text(p.read_text(encoding="utf-8"), str(p))


def build_config(raw: dict[str, str]) -> RunConfig:
    vals = {}
    for key, value in raw.items():
        conv, check, domain = _SCHEMA[key]
        try:
            v = conv(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(key, f"cannot parse {value!r}: {exc}") from None
        if check is not None and not check(v):
            raise ConfigError(key, f"value {value!r} out of domain, must be {domain}")
        vals[key] = v

    model = Model(vals.get("model.type", "seirs"))
    if model is Model.SIRS:
        base = ModelParams.sirs_default(phi=math.pi / 2, alpha=0.968)
        for k in ("model.epsilon", "model.c1", "initial.E"):
            if k in vals:
                raise ConfigError(k, "not used by the sirs model")
    else:
        base = ModelParams.seirs_default(phi=math.pi / 2, alpha=0.993)
    overrides = {k.split(".", 1)[1]: v for k, v in vals.items() if k.startswith("model.")
                 and k != "model.type"}
    params = base.replace(**overrides)

    names = model.compartments
    given = [f"initial.{c}" for c in names if f"initial.{c}" in vals]
    if given and len(given) != len(names):
        missing = [f"initial.{c}" for c in names if f"initial.{c}" not in vals][0]
        raise ConfigError(missing, "missing; give all initial compartments or none")
    initial = tuple(vals[f"initial.{c}"] for c in names) if given else None
    if initial is None:
        try:
            equilibrium(model, params)
        except NoEndemicEquilibriumError as exc:
            raise ConfigError("initial", f"no initial state given and {exc}") from None

    t0 = vals.get("grid.t0", 0.0)
    tf = vals.get("grid.tf", 5.0)
    if not tf > t0:
        raise ConfigError("grid.tf", f"must exceed grid.t0 ({t0})")
    try:
        grid = Grid(t0, tf, vals.get("grid.n_steps", 1000))
    except ParameterDomainError as exc:
        raise ConfigError("grid", str(exc)) from None

    weights = ControlWeights(**{k.split(".")[1]: v for k, v in vals.items() if k.startswith("control.")})
    sweep = SweepSettings(**{k.split(".")[1]: v for k, v in vals.items() if k.startswith("sweep.")})
    cal = {k.split(".")[1]: v for k, v in vals.items() if k.startswith("calibration.")}
    calibration = CalibrationSettings(**cal)
    return RunConfig(model=model, params=params, initial=initial, grid=grid, weights=weights,
                     sweep=sweep, calibration=calibration,
                     costeff_population_scale=vals.get("costeff.population_scale"),
                     label=vals.get("costeff.label"),
                     output_dir=vals.get("output.dir", "out"),
                     explicit_keys=frozenset(raw))


def serialize_config(cfg: RunConfig) -> str:
    """Every key with its effective value; parsing the text gives back ``cfg``."""
    lines = [f"model.type = {cfg.model.value}"]
    if cfg.model is Model.SEIRS:
        names = ("mu", "nu", "gamma", "epsilon", "b0", "b1", "c1", "phi", "alpha")
    else:
        names = ("mu", "nu", "gamma", "b0", "b1", "phi", "alpha")
    for name in names:
        lines.append(f"model.{name} = {getattr(cfg.params, name)!r}")
    if cfg.initial is not None:
        for c, v in zip(cfg.model.compartments, cfg.initial):
            lines.append(f"initial.{c} = {v!r}")
    lines += [f"grid.t0 = {cfg.grid.t0!r}", f"grid.tf = {cfg.grid.tf!r}",
              f"grid.n_steps = {cfg.grid.n_steps}"]
    for f in dataclasses.fields(cfg.weights):
        lines.append(f"control.{f.name} = {getattr(cfg.weights, f.name)!r}")
    for f in dataclasses.fields(cfg.sweep):
        lines.append(f"sweep.{f.name} = {getattr(cfg.sweep, f.name)!r}")
    for f in dataclasses.fields(cfg.calibration):
        v = getattr(cfg.calibration, f.name)
        if v is not None:
            lines.append(f"calibration.{f.name} = {v if isinstance(v, str) else repr(v)}")
    if cfg.costeff_population_scale is not None:
        lines.append(f"costeff.population_scale = {cfg.costeff_population_scale!r}")
    if cfg.label is not None:
        lines.append(f"costeff.label = {cfg.label}")
    lines.append(f"output.dir = {cfg.output_dir}")
    return "\n".join(lines) + "\n"
