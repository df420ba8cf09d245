"""Run configuration: flat ``section.key=value`` text, validated eagerly."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .dynamics import PhysParams
from .linsolve import SolverParams
from .scenarios import CATALOG, ScenarioSpec, vacuum_density


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSpec = field(default_factory=lambda: CATALOG["vacuum"])
    t_end: float = 2.0
    cfl: float = 0.4
    dt_max: float = 0.01
    output_dir: str = "run"
    output_dt: float = 0.0  # 0 -> every step
    snapshot_dt: float = 0.0  # 0 -> initial and final snapshots only
    solver: SolverParams = field(default_factory=SolverParams)
    rho_floor: float = 1e-6
    tracers: int = 0  # seeds per side of the tracer lattice; 0 disables
    seed: int = 0

    def phys(self) -> PhysParams:
        return PhysParams(alpha=self.scenario.alpha, beta=self.scenario.beta, rho_floor=self.rho_floor,
                          cfl=self.cfl, dt_max=self.dt_max, solver=self.solver)

    def to_flat(self) -> dict[str, str]:
        out = {}
        for f in fields(ScenarioSpec):
            v = getattr(self.scenario, f.name)
            key = "scenario.name" if f.name == "name" else (
                f"grid.{f.name}" if f.name in _GRID_KEYS else f"scenario.{f.name}")
            out[key] = _fmt(v)
        out.update({
            "time.t_end": _fmt(self.t_end), "time.cfl": _fmt(self.cfl), "time.dt_max": _fmt(self.dt_max),
            "output.dir": self.output_dir, "output.dt": _fmt(self.output_dt),
            "output.snapshot_dt": _fmt(self.snapshot_dt),
            "solver.rel_tol": _fmt(self.solver.rel_tol),
            "solver.max_iters": "auto" if self.solver.max_iters is None else str(self.solver.max_iters),
            "solver.preconditioner": self.solver.preconditioner, "solver.omega": _fmt(self.solver.omega),
            "physics.rho_floor": _fmt(self.rho_floor), "tracers.n": str(self.tracers), "seed": str(self.seed),
        })
        return dict(sorted(out.items()))


_GRID_KEYS = ("nx", "ny", "lx", "ly", "x0", "y0")


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def parse_text(text: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment; later keys win."""
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _number(key, text, kind):
    try:
        v = kind(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


_SCENARIO_TYPES = {f.name: f.type for f in fields(ScenarioSpec)}


def build_config(flat: dict[str, str]) -> RunConfig:
    """Resolve a flat mapping on top of the named scenario's defaults and validate it."""
    flat = dict(flat)
    name = flat.pop("scenario.name", "vacuum")
    if name not in CATALOG:
        raise ConfigError("scenario.name", f"unknown scenario {name!r}; choose from {sorted(CATALOG)}")
    over = {}
    top = {}
    solver = {}
    for key, text in flat.items():
        section, _, leaf = key.partition(".")
        if section in ("scenario", "grid"):
            if leaf not in _SCENARIO_TYPES or leaf == "name" or (section == "grid") != (leaf in _GRID_KEYS):
                raise ConfigError(key, "unknown key")
            typ = _SCENARIO_TYPES[leaf]
            if leaf == "modes":
                parts = text.split(",")
                if len(parts) != 2:
                    raise ConfigError(key, "expected two integers m,n")
                over[leaf] = tuple(_number(key, p, int) for p in parts)
            elif leaf == "density":
                over[leaf] = text
            elif typ in ("int", int):
                over[leaf] = _number(key, text, int)
            else:
                over[leaf] = _number(key, text, float)
        elif key in ("time.t_end", "time.cfl", "time.dt_max", "output.dt", "output.snapshot_dt",
                     "physics.rho_floor"):
            top[key] = _number(key, text, float)
        elif key in ("tracers.n", "seed"):
            top[key] = _number(key, text, int)
        elif key == "output.dir":
            top[key] = text
        elif key == "solver.rel_tol" or key == "solver.omega":
            solver[leaf] = _number(key, text, float)
        elif key == "solver.max_iters":
            solver[leaf] = None if text == "auto" else _number(key, text, int)
        elif key == "solver.preconditioner":
            solver[leaf] = text
        else:
            raise ConfigError(key, "unknown key")

    try:
        spec = replace(CATALOG[name], name=name, **over)
    except ValueError as err:
        raise ConfigError(_key_for(str(err)), str(err)) from None
    try:
        sol = SolverParams(**solver)
    except ValueError as err:
        raise ConfigError("solver", str(err)) from None
    cfg = RunConfig(
        scenario=spec,
        t_end=top.get("time.t_end", 2.0),
        cfl=top.get("time.cfl", 0.4),
        dt_max=top.get("time.dt_max", 0.01),
        output_dir=top.get("output.dir", "run"),
        output_dt=top.get("output.dt", 0.0),
        snapshot_dt=top.get("output.snapshot_dt", 0.0),
        solver=sol,
        rho_floor=top.get("physics.rho_floor", 1e-6),
        tracers=top.get("tracers.n", 0),
        seed=top.get("seed", 0),
    )
    validate(cfg)
    return cfg


def _key_for(message: str) -> str:
    for leaf in _SCENARIO_TYPES:
        if message.startswith(leaf + " ") or message.startswith(leaf + "∉") or message.startswith(leaf + " ∉"):
            return ("grid." if leaf in _GRID_KEYS else "scenario.") + leaf
    return "scenario"


def validate(cfg: RunConfig) -> None:
    if cfg.t_end < 0:
        raise ConfigError("time.t_end", "must be >= 0")
    if cfg.output_dt < 0:
        raise ConfigError("output.dt", "must be >= 0")
    if cfg.snapshot_dt < 0:
        raise ConfigError("output.snapshot_dt", "must be >= 0")
    if cfg.tracers < 0:
        raise ConfigError("tracers.n", "must be >= 0")
    try:
        cfg.phys()
    except ValueError as err:
        msg = str(err)
        key = ("time.cfl" if "cfl" in msg else "time.dt_max" if "dt_max" in msg
               else "physics.rho_floor" if "rho_floor" in msg else "physics")
        raise ConfigError(key, msg) from None
    s = cfg.scenario
    if s.lx <= 0 or s.ly <= 0:
        raise ConfigError("grid.lx", "extents must be positive")
    if s.density == "vacuum":
        try:
            vacuum_density(s, s.grid)
        except ValueError as err:
            raise ConfigError("grid.nx", str(err)) from None


def load(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    flat = {}
    if path is not None:
        with open(path) as fh:
            flat.update(parse_text(fh.read()))
    flat.update(overrides or {})
    return build_config(flat)
