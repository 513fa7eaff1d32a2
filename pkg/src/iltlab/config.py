"""Run configuration: one YAML document plus command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from .fbm import SAMPLERS
from .model import ExperimentParams, HurstPair, MultiIndex, ParameterError


class ConfigError(ValueError):
    """Malformed or invalid configuration (CLI exit code 2)."""


@dataclass
class RunConfig:
    h1: float = 0.5
    h2: float = 0.5
    d: int = 1
    k: Optional[list] = None  # defaults to zeros of length d
    T: float = 1.0
    epsilon: float = 0.5
    M: int = 256
    N: int = 2000
    seed: int = 0
    sampler: str = "circulant"
    halvings: int = 3
    moment_orders: list = field(default_factory=lambda: [1, 2, 3, 4])
    fuzz_cases: int = 1000
    fuzz_max_n: int = 6
    tail_method: str = "mle"
    tail_bootstrap: int = 200
    dump_replicates: int = 4
    require_convergence: bool = False

    def __post_init__(self):
        if self.k is None:
            self.k = [0] * int(self.d) if isinstance(self.d, int) and self.d >= 1 else []

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.as_dict(), sort_keys=False)

    def params(self) -> ExperimentParams:
        try:
            return ExperimentParams(
                HurstPair(self.h1, self.h2),
                MultiIndex(tuple(self.k)),
                self.T,
                self.epsilon,
                self.M,
                self.N,
                self.seed,
            )
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
FIELD_TYPES: dict[str, Any] = {
    "h1": float, "h2": float, "T": float, "epsilon": float,
    "d": int, "M": int, "N": int, "seed": int, "halvings": int, "fuzz_cases": int,
    "fuzz_max_n": int, "tail_bootstrap": int, "dump_replicates": int,
    "sampler": str, "tail_method": str, "require_convergence": bool,
    "k": list, "moment_orders": list,
}


def _coerce(name: str, value):
    kind = FIELD_TYPES[name]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"field {name!r}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"field {name!r}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"field {name!r}: expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"field {name!r}: expected a string, got {value!r}")
        return value
    if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
        raise ConfigError(f"field {name!r}: expected a list of integers, got {value!r}")
    return list(value)


def from_mapping(data: dict, base: Optional[RunConfig] = None) -> RunConfig:
    unknown = sorted(set(data) - set(FIELDS))
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(repr(u) for u in unknown)}")
    values = (base or RunConfig()).as_dict()
    explicit_k = "k" in data
    for name, value in data.items():
        values[name] = _coerce(name, value)
    if not explicit_k and "d" in data and base is None:
        values["k"] = [0] * values["d"]
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse a YAML mapping into a validated RunConfig with defaults filled in."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"malformed config{where}: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping of field names to values")
    return from_mapping(data)


def validate(cfg: RunConfig) -> None:
    if not cfg.d >= 1:
        raise ConfigError(f"field 'd': must be >= 1, got {cfg.d}")
    if len(cfg.k) != cfg.d:
        raise ConfigError(f"field 'k': length {len(cfg.k)} does not match d={cfg.d}")
    if cfg.sampler not in SAMPLERS:
        raise ConfigError(f"field 'sampler': choose from {sorted(SAMPLERS)}, got {cfg.sampler!r}")
    if cfg.tail_method not in ("mle", "regression"):
        raise ConfigError(f"field 'tail_method': choose 'mle' or 'regression', got {cfg.tail_method!r}")
    for name in ("halvings", "fuzz_cases", "fuzz_max_n", "tail_bootstrap", "dump_replicates"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"field {name!r}: must be nonnegative")
    if not cfg.moment_orders or any(n < 1 for n in cfg.moment_orders):
        raise ConfigError("field 'moment_orders': need positive orders")
    cfg.params()
