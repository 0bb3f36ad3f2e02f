"""Sectioned key=value run configuration files.

Reproducibility beats leniency: every solver and environment field is
addressable, unknown keys are hard errors, and error messages name the
offending ``section.key``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .environments import ENV_CLASSES, Environment, make_env
from .errors import ConfigFileError, ContractOptError
from .oracle import GridSpec, default_grid
from .params import SolverConfig


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_optional_float(raw: str):
    return None if raw.strip() == "" else float(raw)


# solver key -> (SolverConfig attribute, parser)
SOLVER_KEYS = {
    "eta_in": ("eta_in", float),
    "T_in": ("t_in", int),
    "eps_in": ("eps_in", float),
    "eta_out": ("eta_out", float),
    "T_out": ("t_out", int),
    "T_cg": ("t_cg", int),
    "lambda": ("lam", float),
    "eps_cg": ("eps_cg", float),
    "batch_n": ("batch_n", int),
    "refresh_R": ("refresh_r", int),
    "antithetic": ("antithetic", _parse_bool),
    "clip_norm": ("clip_norm", _parse_optional_float),
    "eval_seed": ("eval_seed", int),
    "train_seed": ("train_seed", int),
    "eval_size": ("eval_size", int),
    "init_seed": ("init_seed", int),
    "log_every": ("log_every", int),
}

RUN_KEYS = ("out_dir", "oracle_cache")

GRID_KEYS = (
    "contract_low", "contract_high", "contract_resolution",
    "action_low", "action_high", "action_resolution",
    "eval_batch_size", "seed", "workers", "refine",
)


@dataclass
class RunConfig:
    env: Environment
    solver: SolverConfig
    out_dir: Path | None
    oracle_cache: Path | None
    grid: GridSpec | None
    grid_seed: int
    grid_workers: int
    grid_refine: bool


@dataclass
class SweepConfig:
    base: RunConfig
    env_id: str
    env_params: dict
    sampled: bool
    param: str
    values: list[float]


def _read_ini(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    path = Path(path)
    if not path.exists():
        raise ConfigFileError(f"config file not found: {path}")
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigFileError(f"cannot parse {path}: {exc}") from exc
    return parser


def _build_env(parser: configparser.ConfigParser) -> tuple[Environment, str, dict, bool]:
    if not parser.has_section("env"):
        raise ConfigFileError("missing [env] section (env.id is required)")
    section = dict(parser.items("env"))
    env_id = section.pop("id", None)
    if env_id is None:
        raise ConfigFileError("missing required key env.id")
    if env_id not in ENV_CLASSES:
        raise ConfigFileError(
            f"env.id: unknown environment {env_id!r} "
            f"(known: {', '.join(sorted(ENV_CLASSES))})"
        )
    sampled = False
    if "sampled" in section:
        try:
            sampled = _parse_bool(section.pop("sampled"))
        except ValueError as exc:
            raise ConfigFileError(f"env.sampled: {exc}") from exc
    known = set(ENV_CLASSES[env_id].DEFAULTS)
    params = {}
    for key, raw in section.items():
        if key not in known:
            raise ConfigFileError(f"env.{key}: unknown parameter for {env_id!r}")
        caster = int if key == "k" else float
        try:
            params[key] = caster(raw)
        except ValueError as exc:
            raise ConfigFileError(f"env.{key}: {exc}") from exc
    try:
        env = make_env(env_id, sampled=sampled, **params)
    except ContractOptError as exc:
        raise ConfigFileError(str(exc)) from exc
    return env, env_id, params, sampled


def _build_solver(parser: configparser.ConfigParser) -> SolverConfig:
    kwargs = {}
    if parser.has_section("solver"):
        for key, raw in parser.items("solver"):
            if key not in SOLVER_KEYS:
                raise ConfigFileError(f"solver.{key}: unknown key")
            attr, caster = SOLVER_KEYS[key]
            try:
                kwargs[attr] = caster(raw)
            except ValueError as exc:
                raise ConfigFileError(f"solver.{key}: {exc}") from exc
    try:
        return SolverConfig(**kwargs)
    except ContractOptError as exc:
        raise ConfigFileError(str(exc)) from exc


def _build_grid(parser: configparser.ConfigParser, env: Environment):
    seed = 1234
    workers = 1
    refine = False
    if not parser.has_section("grid"):
        try:
            return default_grid(env), seed, workers, refine
        except ContractOptError:
            return None, seed, workers, refine
    section = dict(parser.items("grid"))
    for key in section:
        if key not in GRID_KEYS:
            raise ConfigFileError(f"grid.{key}: unknown key")

    def floats(key):
        return [float(x) for x in section[key].split(",")]

    try:
        seed = int(section.pop("seed", seed))
        workers = int(section.pop("workers", workers))
        if "refine" in section:
            refine = _parse_bool(section.pop("refine"))
        overrides = {}
        if "contract_resolution" in section:
            overrides["contract_resolution"] = int(section["contract_resolution"])
        if "action_resolution" in section:
            overrides["action_resolution"] = int(section["action_resolution"])
        if "eval_batch_size" in section:
            overrides["eval_batch_size"] = int(section["eval_batch_size"])
        if "contract_low" in section or "contract_high" in section:
            lows, highs = floats("contract_low"), floats("contract_high")
            if len(lows) != len(highs):
                raise ConfigFileError("grid.contract_low/high length mismatch")
            overrides["contract_box"] = tuple(zip(lows, highs))
        if "action_low" in section or "action_high" in section:
            overrides["action_box"] = (
                float(section["action_low"]), float(section["action_high"])
            )
        if "contract_box" in overrides and "action_box" in overrides:
            grid = GridSpec(**overrides)
        else:
            grid = default_grid(env, **overrides)
    except (ValueError, KeyError) as exc:
        raise ConfigFileError(f"grid section: {exc}") from exc
    except ContractOptError as exc:
        raise ConfigFileError(str(exc)) from exc
    return grid, seed, workers, refine


def load_run_config(path: Path) -> RunConfig:
    parser = _read_ini(path)
    for section in parser.sections():
        if section not in ("env", "solver", "run", "grid", "sweep"):
            raise ConfigFileError(f"unknown section [{section}]")
    env, _, _, _ = _build_env(parser)
    solver = _build_solver(parser)
    out_dir = None
    oracle_cache = None
    if parser.has_section("run"):
        for key, raw in parser.items("run"):
            if key not in RUN_KEYS:
                raise ConfigFileError(f"run.{key}: unknown key")
            if key == "out_dir":
                out_dir = Path(raw)
            elif key == "oracle_cache":
                oracle_cache = Path(raw)
    grid, grid_seed, grid_workers, grid_refine = _build_grid(parser, env)
    return RunConfig(
        env=env,
        solver=solver,
        out_dir=out_dir,
        oracle_cache=oracle_cache,
        grid=grid,
        grid_seed=grid_seed,
        grid_workers=grid_workers,
        grid_refine=grid_refine,
    )


def load_sweep_config(path: Path) -> SweepConfig:
    parser = _read_ini(path)
    if not parser.has_section("sweep"):
        raise ConfigFileError("missing [sweep] section")
    section = dict(parser.items("sweep"))
    param = section.pop("param", None)
    if param is None:
        raise ConfigFileError("missing required key sweep.param")
    raw_values = section.pop("values", "").strip()
    values = [float(v) for v in raw_values.split(",") if v.strip() != ""]
    for key in section:
        raise ConfigFileError(f"sweep.{key}: unknown key")

    base = load_run_config(path)
    env, env_id, env_params, sampled = _build_env(parser)
    if param not in ENV_CLASSES[env_id].DEFAULTS:
        raise ConfigFileError(
            f"sweep.param: {param!r} is not a parameter of {env_id!r}"
        )
    return SweepConfig(
        base=base,
        env_id=env_id,
        env_params=env_params,
        sampled=sampled,
        param=param,
        values=values,
    )
