"""TOML scenario files: factor specs, parameter sets and task settings."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import tomli
import tomli_w

from .factor import FactorSpec
from .timelike import TimelikeParamSet, build_modified_factor, derive_params

TASKS = ("validate-factor", "lengths", "distance", "certify-obstruction", "midpoint-excess",
         "timelike-build", "topological-contrast", "conjugate-cut", "limit-curves")
# interface names accepted on input and mapped to the task they run
TASK_ALIASES = {"claim32": "midpoint-excess"}
FACTOR_KEYS = {"variant", "plateau", "support", "cutoff_plateau", "cutoff_support",
               "max_index", "dips", "scale", "derive_dips"}
TOP_KEYS = {"name", "task", "seed", "factor", "params", "expect", "plots", "mesh_level"}


class ConfigError(ValueError):
    """The scenario file is missing, malformed or inconsistent."""


@dataclass
class Scenario:
    name: str
    task: str
    factor: dict
    params: dict = field(default_factory=dict)
    expect: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    seed: int = 0
    mesh_level: int = 6

    def resolved(self) -> dict:
        """Plain nested dict of every setting the run depends on."""
        return {"name": self.name, "task": self.task, "seed": self.seed,
                "mesh_level": self.mesh_level, "factor": copy.deepcopy(self.factor),
                "params": copy.deepcopy(self.params), "expect": copy.deepcopy(self.expect),
                "plots": copy.deepcopy(self.plots)}


def read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def write_toml(data: dict, path) -> None:
    with open(path, "wb") as fh:
        tomli_w.dump(data, fh)


def scenario_from_dict(raw: dict, mesh_level: int | None = None, seed: int | None = None) -> Scenario:
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    task = raw.get("task")
    if task is None:
        raise ConfigError("config declares no task")
    task = TASK_ALIASES.get(task, task)
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    factor = dict(raw.get("factor", {"variant": "base"}))
    bad = set(factor) - FACTOR_KEYS
    if bad:
        raise ConfigError(f"unknown factor keys: {sorted(bad)}")
    for name in ("params", "expect", "plots"):
        if not isinstance(raw.get(name, {}), dict):
            raise ConfigError(f"[{name}] must be a table")
    level = raw.get("mesh_level", 6) if mesh_level is None else mesh_level
    sd = raw.get("seed", 0) if seed is None else seed
    if not isinstance(level, int) or not 0 <= level <= 9:
        raise ConfigError(f"mesh level {level!r} outside 0..9")
    if not isinstance(sd, int) or sd < 0:
        raise ConfigError(f"seed {sd!r} must be a non-negative integer")
    sc = Scenario(raw.get("name", task), task, factor, dict(raw.get("params", {})),
                  dict(raw.get("expect", {})), dict(raw.get("plots", {})), sd, level)
    build_factor(sc.factor)  # fail early on invalid factor settings
    return sc


def load_scenario(path, mesh_level: int | None = None, seed: int | None = None) -> Scenario:
    return scenario_from_dict(read_toml(path), mesh_level, seed)


def build_factor(cfg: dict):
    """FactorSpec (and the parameter set, for derived dips) from a [factor] table."""
    cfg = dict(cfg)
    derive = cfg.pop("derive_dips", None)
    try:
        if derive is not None:
            if cfg.get("variant", "modified") != "modified":
                raise ConfigError("derive_dips needs the modified variant")
            cfg["variant"] = "base"
            base = FactorSpec.from_dict(cfg)
            params = derive_params(base, int(derive))
            return build_modified_factor(base, params), params
        return FactorSpec.from_dict(cfg), None
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid factor: {exc}") from exc


def factor_to_toml(spec: FactorSpec) -> dict:
    d = spec.to_dict()
    if not d["dips"]:
        del d["dips"]
    return d


def write_params(params: TimelikeParamSet, path) -> None:
    write_toml({"params": params.to_dict()}, path)


def read_params(path, enforce: bool = True) -> TimelikeParamSet:
    return TimelikeParamSet.from_dict(read_toml(path)["params"], enforce=enforce)
