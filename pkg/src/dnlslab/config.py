"""
Plain-text experiment configuration: sectioned `key = value` format.

Strict parsing: unknown sections or keys are rejected, values are typed, and
a config round-trips bit-exactly through serialize/parse (floats are written
with repr, which is lossless).  One config fully determines a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .core import Grid1D, ModelParams, SymbolF
from .solver import DEFAULT_CHECKPOINT_RATIO, StepConfig
from .weyl import CutoffSpec

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "serialize_config"]


class ConfigError(ValueError):
    pass


def _parse_schedule(s: str):
    if not s:
        return ()
    out = []
    for part in s.split(","):
        t_from, dt = part.split(":")
        out.append((float(t_from), float(dt)))
    return tuple(out)


def _fmt_schedule(sched) -> str:
    return ",".join(f"{t!r}:{dt!r}" for t, dt in sched)


@dataclass
class ExperimentConfig:
    # [model]
    alpha: float = 1.8
    lambda1: float = 0.0
    lambda2: float = 1.0
    # [symbol]
    c2: float = 0.5
    c1: float = 0.0
    c0: float = 0.0
    # [grid]
    n: int = 4096
    half_width: float = 64.0
    # [scaled_grid]
    scaled_n: int = 4096
    scaled_half_width: float = 4.0
    # [stepping]
    dt: float = 0.01
    t_max: float = 10.0
    checkpoint_ratio: float = DEFAULT_CHECKPOINT_RATIO
    boundary_budget: float = 1e-3
    schedule: tuple = ()
    # [cutoff]
    r_inner: float = 1.0
    r_outer: float = 2.0
    # [initial]
    ic_kind: str = "gaussian"
    ic_amplitude: float = 1.0
    ic_width: float = 1.0
    ic_chirp: float = 0.0
    ic_velocity: float = 0.0
    ic_separation: float = 10.0
    ic_power: int = 2
    ic_path: str = ""
    # [pipeline]
    scaled: bool = False
    diagnostics: bool = True
    t_scaled_start: float = 1.0
    threshold_rel: float = 1e-3
    limit_tolerance: float = 0.1
    oracle_n: int = 128
    oracle_half_width: float = 8.0
    oracle_tolerance: float = 1e-6
    # [output]
    out_dir: str = "out"

    # --- object builders -------------------------------------------------
    def model(self) -> ModelParams:
        return ModelParams(self.alpha, self.lambda1, self.lambda2)

    def symbol(self) -> SymbolF:
        return SymbolF(self.c2, self.c1, self.c0)

    def grid(self) -> Grid1D:
        return Grid1D(self.n, self.half_width)

    def scaled_grid(self) -> Grid1D:
        return Grid1D(self.scaled_n, self.scaled_half_width)

    def stepping(self) -> StepConfig:
        return StepConfig(
            dt=self.dt,
            t_max=self.t_max,
            checkpoint_ratio=self.checkpoint_ratio,
            boundary_budget=self.boundary_budget,
            schedule=self.schedule,
        )

    def cutoff(self) -> CutoffSpec:
        return CutoffSpec(self.r_inner, self.r_outer)

    def initial_params(self) -> dict:
        return {
            "amplitude": self.ic_amplitude,
            "width": self.ic_width,
            "chirp": self.ic_chirp,
            "velocity": self.ic_velocity,
            "separation": self.ic_separation,
            "power": self.ic_power,
            "path": self.ic_path,
        }


_SECTIONS = {
    "model": {"alpha", "lambda1", "lambda2"},
    "symbol": {"c2", "c1", "c0"},
    "grid": {"n", "half_width"},
    "scaled_grid": {"scaled_n", "scaled_half_width"},
    "stepping": {"dt", "t_max", "checkpoint_ratio", "boundary_budget", "schedule"},
    "cutoff": {"r_inner", "r_outer"},
    "initial": {
        "ic_kind", "ic_amplitude", "ic_width", "ic_chirp", "ic_velocity",
        "ic_separation", "ic_power", "ic_path",
    },
    "pipeline": {
        "scaled", "diagnostics", "t_scaled_start", "threshold_rel",
        "limit_tolerance", "oracle_n", "oracle_half_width", "oracle_tolerance",
    },
    "output": {"out_dir"},
}

_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    t = _TYPES[key]
    if key == "schedule":
        return _parse_schedule(raw)
    if t == "int":
        return int(raw)
    if t == "float":
        return float(raw)
    if t == "bool":
        if raw in ("true", "false"):
            return raw == "true"
        raise ConfigError(f"boolean key {key} must be 'true' or 'false', got {raw!r}")
    return raw


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _SECTIONS[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in section [{section}]")
        try:
            setattr(cfg, key, _coerce(key, raw))
        except ConfigError:
            raise
        except Exception as e:
            raise ConfigError(f"line {lineno}: bad value for {key}: {e}") from e
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key in sorted(keys):
            val = getattr(cfg, key)
            if key == "schedule":
                sval = _fmt_schedule(val)
            elif isinstance(val, bool):
                sval = "true" if val else "false"
            elif isinstance(val, float):
                sval = repr(val)
            else:
                sval = str(val)
            lines.append(f"{key} = {sval}")
        lines.append("")
    return "\n".join(lines)
