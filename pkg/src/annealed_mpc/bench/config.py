"""Experiment configuration: flat ``key = value`` text with dotted sections.

Every key must appear in ``REGISTRY`` (or be an ``env.*`` / ``mismatch.*``
parameter of the selected environment); anything else is a hard error, since
a silently ignored typo would invalidate a benchmark.

Example::

    # wall-jump comparison at equal budget
    env.id = wall_jump
    solvers = dial, mppi-explore, mppi-exploit
    budget.samples = 256
    budget.iterations = 4
    run.seeds = 0..99
    run.steps = 125

Values layer in this order: registry defaults, ``--preset``, the config
file, then command-line flags.
"""
from __future__ import annotations

import copy
import dataclasses
import typing
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..envs import ENVIRONMENTS
from ..envs.hopper import default_pads, random_pads


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending key (and source line)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


SOLVER_IDS = ("dial", "mppi-explore", "mppi-exploit", "mppi", "cmaes")


def parse_seeds(text: str) -> List[int]:
    """``"0..9"`` (inclusive range), ``"1, 5, 7"`` or a mix of both."""
    seeds: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if any(s < 0 for s in seeds):
        raise ValueError("seeds must be non-negative")
    return seeds


def _list(text: str) -> List[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _floats(text: str) -> List[float]:
    return [float(p) for p in _list(text)]


def _ints(text: str) -> List[int]:
    return [int(p) for p in _list(text)]


def _opt_int(text: str) -> Optional[int]:
    return None if text.strip().lower() in ("", "none") else int(text)


def _opt_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    doc: str


REGISTRY: Dict[str, Key] = {
    "env.id": Key(str, "wall_jump", "environment id: " + ", ".join(sorted(ENVIRONMENTS))),
    "solvers": Key(_list, ["dial"], "comma list of solver ids: " + ", ".join(SOLVER_IDS)),
    "budget.samples": Key(int, 256, "samples per iteration (N_W); CMA-ES population"),
    "budget.iterations": Key(int, 4, "iterations per control step (N); CMA-ES generations"),
    "budget.horizon": Key(int, 20, "planning horizon H in control steps"),
    "budget.dt": Key(_opt_float, None, "control period in seconds (none = environment dt)"),
    "solver.temperature": Key(float, 0.1, "softmax temperature lambda"),
    "dial.sigma_base": Key(float, 1.0, "base kernel standard deviation"),
    "dial.beta1": Key(float, 1.0, "trajectory-level annealing rate"),
    "dial.beta2": Key(float, 1.0, "action-level annealing rate"),
    "dial.node_count": Key(_opt_int, None, "spline nodes (none = one per control step)"),
    "dial.interp": Key(str, "linear", "node interpolation: linear or cubic"),
    "mppi.sigma": Key(_opt_float, None, "kernel std for solver id 'mppi'"),
    "mppi.iterations": Key(_opt_int, None, "MPPI iterations per step (none = budget.iterations)"),
    "cmaes.step_size": Key(float, 0.3, "initial CMA-ES step size"),
    "cmaes.selection_fraction": Key(float, 0.5, "fraction of the population recombined"),
    "run.seeds": Key(parse_seeds, list(range(10)), "seed list, e.g. 0..99 or 1,2,3"),
    "run.steps": Key(int, 125, "episode length T in control steps"),
    "out.dir": Key(str, "out", "output directory"),
    "sweep.beta1": Key(_floats, [1.0], "sweep values for dial.beta1"),
    "sweep.beta2": Key(_floats, [1.0], "sweep values for dial.beta2"),
    "sweep.iterations": Key(_ints, [4], "sweep values for budget.iterations"),
    "sweep.sigma_base": Key(_floats, [1.0], "sweep values for dial.sigma_base"),
}

PRESETS: Dict[str, Dict[str, str]] = {
    # N_W = 2048, H = 20 at 50 Hz
    "paper-budget": {"budget.samples": "2048", "budget.horizon": "20", "budget.dt": "0.02"},
    "crate-climbing": {"budget.samples": "4096", "budget.horizon": "40",
                       "budget.iterations": "4", "budget.dt": "0.02"},
    "explore": {"solvers": "mppi-explore"},
    "exploit": {"solvers": "mppi-exploit"},
    "wall-jump": {
        "env.id": "wall_jump", "solvers": "dial, mppi-explore, mppi-exploit",
        "budget.samples": "256", "budget.iterations": "4", "budget.horizon": "20",
        "solver.temperature": "0.1", "run.seeds": "0..99", "run.steps": "125",
    },
    "double-integrator": {
        "env.id": "double_integrator", "env.episode_steps": "11", "solvers": "dial",
        "budget.samples": "256", "budget.iterations": "4", "budget.horizon": "10",
        "solver.temperature": "0.1", "run.seeds": "0", "run.steps": "11",
    },
    "hopper-mismatch": {
        "env.id": "hopper", "mismatch.body_mass": "4.0", "solvers": "dial",
        "run.steps": "250", "run.seeds": "0..4",
    },
    # trial counts used for the hardware-style experiments
    "trials-jump": {"run.seeds": "0..4"},
    "trials-climb": {"run.seeds": "0..9"},
}


def _parse_pads(text: str):
    t = text.strip().lower()
    if t == "default":
        return default_pads()
    if t.startswith("random:"):
        return random_pads(int(t.split(":", 1)[1]))
    raise ValueError("expected 'default' or 'random:<seed>'")


def _env_field_parser(env_id: str, name: str) -> Callable[[str], Any]:
    model_cls = ENVIRONMENTS[env_id]
    fields = {f.name: f for f in dataclasses.fields(model_cls)}
    if name not in fields:
        raise KeyError(name)
    if name == "pads":
        return _parse_pads
    hints = typing.get_type_hints(model_cls)
    kind = hints.get(name, float)
    if kind is int:
        return int
    if kind is bool:
        return lambda s: s.strip().lower() in ("1", "true", "yes", "on")
    return float


@dataclass
class ExperimentConfig:
    env_id: str = "wall_jump"
    env_params: Dict[str, Any] = field(default_factory=dict)
    mismatch: Dict[str, Any] = field(default_factory=dict)
    solvers: List[str] = field(default_factory=lambda: ["dial"])
    samples: int = 256
    iterations: int = 4
    horizon: int = 20
    dt: Optional[float] = None
    temperature: float = 0.1
    sigma_base: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    node_count: Optional[int] = None
    interp: str = "linear"
    mppi_sigma: Optional[float] = None
    mppi_iterations: Optional[int] = None
    cmaes_step_size: float = 0.3
    cmaes_selection_fraction: float = 0.5
    seeds: List[int] = field(default_factory=lambda: list(range(10)))
    steps: int = 125
    out_dir: str = "out"
    sweep: Dict[str, list] = field(default_factory=dict)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


_ATTR = {
    "env.id": "env_id", "solvers": "solvers", "budget.samples": "samples",
    "budget.iterations": "iterations", "budget.horizon": "horizon", "budget.dt": "dt",
    "solver.temperature": "temperature", "dial.sigma_base": "sigma_base",
    "dial.beta1": "beta1", "dial.beta2": "beta2", "dial.node_count": "node_count",
    "dial.interp": "interp", "mppi.sigma": "mppi_sigma", "mppi.iterations": "mppi_iterations",
    "cmaes.step_size": "cmaes_step_size", "cmaes.selection_fraction": "cmaes_selection_fraction",
    "run.seeds": "seeds", "run.steps": "steps", "out.dir": "out_dir",
}


def parse_text(text: str, source: str = "<config>") -> List[Tuple[str, str, str]]:
    """Split config text into ``(key, raw value, location)`` triples."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        loc = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(loc, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(loc, "empty key")
        out.append((key, value, loc))
    return out


def build_config(entries: List[Tuple[str, str, str]]) -> ExperimentConfig:
    """Resolve layered ``(key, value, location)`` entries into a validated config.

    Later entries override earlier ones. ``env.*`` and ``mismatch.*`` keys
    are checked against the selected environment once ``env.id`` is known.
    """
    final: Dict[str, Tuple[str, str]] = {}
    for key, value, loc in entries:
        final[key] = (value, loc)

    cfg = ExperimentConfig()
    for key, attr in _ATTR.items():
        setattr(cfg, attr, copy.deepcopy(REGISTRY[key].default))
    env_id_raw = final.get("env.id", ("wall_jump", "<default>"))
    if env_id_raw[0] not in ENVIRONMENTS:
        raise ConfigError(f"{env_id_raw[1]}: env.id",
                          f"unknown environment {env_id_raw[0]!r}; known: {sorted(ENVIRONMENTS)}")

    env_params, mismatch, sweep = {}, {}, {}
    for key, (value, loc) in final.items():
        section, _, name = key.partition(".")
        if section in ("env", "mismatch") and name != "id" and name:
            try:
                parser = _env_field_parser(env_id_raw[0], name)
            except KeyError:
                raise ConfigError(f"{loc}: {key}",
                                  f"{env_id_raw[0]} has no parameter {name!r}") from None
            try:
                parsed = parser(value)
            except ValueError as exc:
                raise ConfigError(f"{loc}: {key}", str(exc)) from None
            (env_params if section == "env" else mismatch)[name] = parsed
            continue
        if key not in REGISTRY:
            raise ConfigError(f"{loc}: {key}", "unknown key (see annealed-mpc keys)")
        try:
            parsed = REGISTRY[key].parse(value)
        except ValueError as exc:
            raise ConfigError(f"{loc}: {key}", str(exc)) from None
        if section == "sweep":
            sweep[name] = parsed
        else:
            setattr(cfg, _ATTR[key], parsed)

    cfg.env_params = env_params
    cfg.mismatch = mismatch
    cfg.sweep = {k.split(".", 1)[1]: list(v.default) for k, v in REGISTRY.items()
                 if k.startswith("sweep.")}
    cfg.sweep.update(sweep)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    if not cfg.seeds:
        raise ConfigError("run.seeds", "seed list is empty")
    if not cfg.solvers:
        raise ConfigError("solvers", "no solver selected")
    for sid in cfg.solvers:
        if sid not in SOLVER_IDS:
            raise ConfigError("solvers", f"unknown solver {sid!r}; known: {list(SOLVER_IDS)}")
    if len(set(cfg.solvers)) != len(cfg.solvers):
        raise ConfigError("solvers", "duplicate solver ids")
    if "mppi" in cfg.solvers and cfg.mppi_sigma is None:
        raise ConfigError("mppi.sigma", "solver 'mppi' needs an explicit kernel std")
    for key, attr in (("budget.samples", "samples"), ("budget.iterations", "iterations"),
                      ("budget.horizon", "horizon"), ("run.steps", "steps")):
        if getattr(cfg, attr) < 1:
            raise ConfigError(key, "must be >= 1")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError("budget.dt", "must be positive")
    if not cfg.temperature > 0:
        raise ConfigError("solver.temperature", "must be positive")
    if cfg.interp not in ("linear", "cubic"):
        raise ConfigError("dial.interp", "must be linear or cubic")
    if cfg.node_count is not None and not 2 <= cfg.node_count <= cfg.horizon:
        raise ConfigError("dial.node_count", "must satisfy 2 <= node_count <= budget.horizon")
    try:
        model = ENVIRONMENTS[cfg.env_id](**cfg.env_params)
        model.with_params(**cfg.mismatch)
    except (TypeError, ValueError) as exc:
        raise ConfigError("env", str(exc)) from None


def load_config(path: Optional[str] = None, preset: Optional[str] = None,
                overrides: Optional[List[Tuple[str, str]]] = None) -> ExperimentConfig:
    entries: List[Tuple[str, str, str]] = []
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("--preset", f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        entries += [(k, v, f"preset {preset}") for k, v in PRESETS[preset].items()]
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        entries += parse_text(text, str(path))
    for key, value in overrides or []:
        entries.append((key, value, "command line"))
    return build_config(entries)


def describe_keys() -> str:
    width = max(len(k) for k in REGISTRY)
    lines = [f"{k.ljust(width)}  {v.doc} (default: {v.default})" for k, v in REGISTRY.items()]
    lines.append(f"{'env.<param>'.ljust(width)}  environment parameter of env.id")
    lines.append(f"{'mismatch.<param>'.ljust(width)}  override applied to the solver's model only")
    return "\n".join(lines)
