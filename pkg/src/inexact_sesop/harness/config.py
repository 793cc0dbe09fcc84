"""Run and sweep configurations, loaded from JSON."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, asdict
from typing import Optional, Union


class ConfigError(ValueError):
    pass


@dataclass
class ProblemConfig:
    type: str = "quadratic"
    n: int = 100
    seed: int = 0
    # None -> origin; list -> explicit point; {"low", "high", "seed"} -> uniform draw
    x0: Optional[Union[list, dict]] = None


@dataclass
class OracleConfig:
    delta1: float = 0.0
    seed: int = 0


@dataclass
class SolverConfig:
    type: str = "sesop"
    iterations: int = 1000
    subsolver: str = "exact"
    delta4: float = 0.0
    max_inner_iters: int = 10**12


@dataclass
class OutputConfig:
    trace_path: Optional[str] = None
    report_path: Optional[str] = None


@dataclass
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "RunConfig":
        p, o, s = self.problem, self.oracle, self.solver
        if p.type not in ("quadratic", "quasar"):
            raise ConfigError(f"problem.type must be quadratic or quasar, got {p.type!r}")
        if not isinstance(p.n, int) or p.n < 1:
            raise ConfigError("problem.n must be a positive integer")
        if o.delta1 < 0:
            raise ConfigError("oracle.delta1 must be >= 0")
        if s.type not in ("sesop", "stm"):
            raise ConfigError(f"solver.type must be sesop or stm, got {s.type!r}")
        if not isinstance(s.iterations, int) or s.iterations < 1:
            raise ConfigError("solver.iterations must be a positive integer")
        if s.subsolver not in ("exact", "iterative"):
            raise ConfigError(f"solver.subsolver must be exact or iterative, got {s.subsolver!r}")
        if s.delta4 < 0:
            raise ConfigError("solver.delta4 must be >= 0")
        if isinstance(p.x0, list) and len(p.x0) != p.n:
            raise ConfigError("problem.x0 length must equal n")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - {"problem", "oracle", "solver", "output"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        try:
            cfg = cls(
                problem=ProblemConfig(**d.get("problem", {})),
                oracle=OracleConfig(**d.get("oracle", {})),
                solver=SolverConfig(**d.get("solver", {})),
                output=OutputConfig(**d.get("output", {})),
            )
        except TypeError as e:
            raise ConfigError(str(e)) from None
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        return cls.from_dict(d)

    def replace(self, axis: str, value) -> "RunConfig":
        c = copy.deepcopy(self)
        if axis == "delta1":
            c.oracle.delta1 = value
        elif axis == "delta4":
            c.solver.delta4 = value
        elif axis == "seed":
            c.problem.seed = value
            c.oracle.seed = value
        else:
            raise ConfigError(f"unknown sweep axis {axis!r}")
        return c


@dataclass
class SweepConfig:
    base: RunConfig
    sweep_axis: str
    values: list
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    parallelism: int = 1

    def __post_init__(self):
        if self.sweep_axis not in ("delta1", "delta4"):
            raise ConfigError("sweep_axis must be delta1 or delta4")
        if not self.values or any(v < 0 for v in self.values):
            raise ConfigError("sweep values must be a non-empty list of non-negative numbers")

    def expand(self) -> list:
        return [self.base.replace("seed", s).replace(self.sweep_axis, v)
                for v in self.values for s in self.seeds]
