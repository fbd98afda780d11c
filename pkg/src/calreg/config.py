"""Strict JSON experiment configs."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

from .entropy import BUILTIN_NAMES

MODES = ("nonuniform", "uniform", "characterize", "lowerbound", "properties")
INSTANCES = ("random", "two_point")
ORACLES_A = ("erm_distinguisher", "zero", "exact_max_violation")
ORACLES_B = ("erm_calibration", "zero")
SWEEPABLE = ("eps", "L", "N", "seed", "n_fields", "delta", "selection")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "nonuniform"
    instance: str = "random"
    N: int = 32
    L: int = 4
    eps: float = 0.2
    delta: float = 0.1
    seed: int = 0
    notions: list[str] = field(default_factory=lambda: list(BUILTIN_NAMES))
    n_fields: int = 16
    selection: str = "first"
    exact: bool = False
    strict_bits: bool = False
    oracle_A: str = "erm_distinguisher"
    oracle_B: str = "erm_calibration"
    trials: int = 1
    hypothesis_size: int = 8
    design_n: int = 256
    alpha: float = 0.0625
    design_m: int = 50
    stress_size: int = 10_000
    lb_sizes: list[int] = field(default_factory=lambda: [10, 20, 40])
    quick: bool = True
    sweep: dict[str, list] = field(default_factory=dict)
    out_dir: str = "out"

    def validate(self) -> "ExperimentConfig":
        _check(self.mode in MODES, "mode", f"must be one of {MODES}, got {self.mode!r}")
        _check(self.instance in INSTANCES, "instance", f"must be one of {INSTANCES}, got {self.instance!r}")
        _check(0 < self.eps < 0.5, "eps", f"eps must lie in (0, 1/2), got {self.eps}")
        _check(0 < self.delta < 0.5, "delta", f"delta must lie in (0, 1/2), got {self.delta}")
        _check(self.N >= 1, "N", "must be at least 1")
        _check(self.L >= 2, "L", "must be at least 2")
        _check(self.n_fields >= 0, "n_fields", "must be nonnegative")
        _check(self.trials >= 1, "trials", "must be at least 1")
        _check(self.hypothesis_size >= 1, "hypothesis_size", "must be at least 1")
        _check(self.selection in ("first", "max"), "selection", "must be 'first' or 'max'")
        _check(self.oracle_A in ORACLES_A, "oracle_A", f"must be one of {ORACLES_A}")
        _check(self.oracle_B in ORACLES_B, "oracle_B", f"must be one of {ORACLES_B}")
        _check(bool(self.notions), "notions", "must be nonempty")
        for n in self.notions:
            _check(n in BUILTIN_NAMES, "notions", f"unknown notion {n!r}; choose from {BUILTIN_NAMES}")
        _check(0 < self.alpha < 1, "alpha", "must lie in (0, 1)")
        _check(self.design_m >= 1 and self.design_n >= 2, "design_m", "design sizes must be positive")
        _check(self.stress_size >= 1, "stress_size", "must be at least 1")
        _check(all(1 <= k <= self.design_m for k in self.lb_sizes), "lb_sizes", "each size must lie in [1, design_m]")
        for key, values in self.sweep.items():
            _check(key in SWEEPABLE, f"sweep.{key}", f"not sweepable; choose from {SWEEPABLE}")
            _check(isinstance(values, list), f"sweep.{key}", "must be a list")
            for v in values:
                replace(self, sweep={}, **{key: v}).validate()
        return self

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def cells(self) -> list[tuple[dict, "ExperimentConfig"]]:
        """Cross product of the sweep lists in sorted key order; empty sweep gives one cell."""
        keys = sorted(k for k, v in self.sweep.items() if v)
        if not keys:
            return [({}, replace(self, sweep={}))]
        out = []
        for combo in itertools.product(*(self.sweep[k] for k in keys)):
            params = dict(zip(keys, combo))
            out.append((params, replace(self, sweep={}, **params)))
        return out


def _check(ok: bool, key: str, msg: str):
    if not ok:
        raise ConfigError(f"field '{key}': {msg}")


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"field '{key}': expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"field '{key}': expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"field '{key}': expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"field '{key}': expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"field '{key}': expected a list, got {value!r}")
        return list(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"field '{key}': expected an object, got {value!r}")
        return dict(value)
    return value


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    defaults = ExperimentConfig()
    unknown = sorted(set(raw) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    kwargs = {k: _coerce(k, v, getattr(defaults, k)) for k, v in raw.items()}
    return ExperimentConfig(**kwargs).validate()


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
