"""Flat INI run configuration: parse, validate, canonical serialize, hash."""
from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass

__all__ = ["RunConfig", "ConfigError", "parse_config", "serialize_config", "config_hash"]


class ConfigError(ValueError):
    """Invalid run configuration; carries the full list of violations."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "default"
    seed: int = 20240601
    out: str = "runs/default"
    a: float = 1.0
    b: float = 2.0
    horizon: float = 1.0
    x0: float = 0.0
    modes: int = 8
    steps: int = 2048
    quad_panels: int = 8
    quad_order: int = 16
    time_stride: int = 2
    trials: int = 256
    lambda_grid: tuple = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    epsilon: float = 0.125
    obs_corpus: int = 64
    obs_trials: int = 200
    obs_noise_amplitude: float = 0.1
    manufactured_count: int = 5
    manufactured_amplitude: float = 1.0

    @property
    def step_size(self) -> float:
        return self.horizon / self.steps

    def validate(self) -> "RunConfig":
        problems = []
        if not self.b > self.a:
            problems.append(f"domain: b ({self.b}) must exceed a ({self.a})")
        if not self.a > 0 and self.x0 == 0.0:
            problems.append(f"domain: a ({self.a}) must be positive when x0 = 0")
        if not self.x0 < self.a:
            problems.append(f"domain: x0 ({self.x0}) must lie left of a ({self.a})")
        if not self.horizon > 0:
            problems.append(f"domain: horizon ({self.horizon}) must be positive")
        if self.modes < 1:
            problems.append(f"discretization: modes ({self.modes}) must be >= 1")
        if self.steps < 2:
            problems.append(f"discretization: steps ({self.steps}) must be >= 2")
        if self.quad_panels < 1 or self.quad_order < 2:
            problems.append("discretization: quadrature needs panels >= 1 and order >= 2")
        if self.time_stride < 1:
            problems.append("discretization: time_stride must be >= 1")
        if self.trials < 2:
            problems.append(f"monte_carlo: trials ({self.trials}) must be >= 2")
        if not self.lambda_grid:
            problems.append("weights: lambda_grid must be non-empty")
        elif any(not v > 0 for v in self.lambda_grid):
            problems.append("weights: every lambda must be positive")
        if not 0.0 < self.epsilon < self.horizon / 2.0:
            problems.append(
                f"weights: epsilon ({self.epsilon}) must lie in (0, horizon/2)")
        if self.obs_corpus < 1 or self.obs_trials < 2:
            problems.append("observability: corpus >= 1 and trials >= 2 required")
        if self.manufactured_count < 1:
            problems.append("manufactured: count must be >= 1")
        if not 0 <= self.seed < 2**64:
            problems.append(f"run: seed ({self.seed}) must fit in 64 bits")
        if problems:
            raise ConfigError(problems)
        return self


_SCHEMA = {
    "run": {"scenario": str, "seed": int, "out": str},
    "domain": {"a": float, "b": float, "horizon": float, "x0": float},
    "discretization": {
        "modes": int, "steps": int, "quad_panels": int, "quad_order": int,
        "time_stride": int,
    },
    "monte_carlo": {"trials": int},
    "weights": {"lambda_grid": "floats", "epsilon": float},
    "observability": {"corpus": int, "trials": int, "noise_amplitude": float},
    "manufactured": {"count": int, "amplitude": float},
}

_FIELD_FOR = {
    ("run", "scenario"): "scenario",
    ("run", "seed"): "seed",
    ("run", "out"): "out",
    ("domain", "a"): "a",
    ("domain", "b"): "b",
    ("domain", "horizon"): "horizon",
    ("domain", "x0"): "x0",
    ("discretization", "modes"): "modes",
    ("discretization", "steps"): "steps",
    ("discretization", "quad_panels"): "quad_panels",
    ("discretization", "quad_order"): "quad_order",
    ("discretization", "time_stride"): "time_stride",
    ("monte_carlo", "trials"): "trials",
    ("weights", "lambda_grid"): "lambda_grid",
    ("weights", "epsilon"): "epsilon",
    ("observability", "corpus"): "obs_corpus",
    ("observability", "trials"): "obs_trials",
    ("observability", "noise_amplitude"): "obs_noise_amplitude",
    ("manufactured", "count"): "manufactured_count",
    ("manufactured", "amplitude"): "manufactured_amplitude",
}


def parse_config(text: str) -> RunConfig:
    """Parse the sectioned key-value text into a validated RunConfig."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc
    problems = []
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                problems.append(f"unknown key {key} in [{section}]")
                continue
            kind = _SCHEMA[section][key]
            field = _FIELD_FOR[(section, key)]
            try:
                if kind is str:
                    values[field] = raw.strip()
                elif kind is int:
                    values[field] = int(raw)
                elif kind is float:
                    values[field] = float(raw)
                elif kind == "floats":
                    values[field] = tuple(float(v) for v in raw.replace(",", " ").split())
            except ValueError:
                problems.append(f"[{section}] {key}: cannot parse {raw!r} as {kind}")
    if problems:
        raise ConfigError(problems)
    return RunConfig(**values).validate()


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; the output directory is an execution detail and
    is deliberately left out so runs hash the same wherever they land."""
    buf = io.StringIO()
    for section in _SCHEMA:
        buf.write(f"[{section}]\n")
        for key in _SCHEMA[section]:
            if (section, key) == ("run", "out"):
                continue
            field = _FIELD_FOR[(section, key)]
            val = getattr(cfg, field)
            if isinstance(val, tuple):
                buf.write(f"{key} = {', '.join(repr(v) for v in val)}\n")
            elif isinstance(val, float):
                buf.write(f"{key} = {val!r}\n")
            else:
                buf.write(f"{key} = {val}\n")
        buf.write("\n")
    return buf.getvalue()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()
