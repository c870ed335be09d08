"""Flat ``key = value`` run configuration with validation against the benchmark registry."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .benchmarks import BENCHMARKS, get_case
from .integrator import TARGETS
from .limiters import ENTROPY_FIXES

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config"]


class ConfigError(ValueError):
    pass


_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


@dataclass
class RunConfig:
    """Resolved experiment definition; unset numerics fall back to the case defaults."""

    problem: str
    cells: int | None = None
    dt: float | None = None
    t_final: float | None = None
    target: str | None = None
    bp: bool = True
    entropy_fix: str = "none"
    bound: str = "ec"
    delta: float = 1e-2
    output_dir: str = "afc-output"
    audit_stride: int = 1
    cfl_policy: str = "warn"
    dt_scaling: str = "linear"
    fdi_tolerance: float = 1e-8
    fdi_max_iterations: int = 100

    def resolve(self) -> "RunConfig":
        """Fill defaults from the benchmark case and validate everything."""
        if self.problem not in BENCHMARKS:
            raise ConfigError(f"problem: unknown problem {self.problem!r}; "
                              f"choose from {', '.join(sorted(BENCHMARKS))}")
        case = get_case(self.problem)
        out = RunConfig(**{f.name: getattr(self, f.name) for f in fields(self)})
        if out.cells is None:
            out.cells = case.cells
        if out.dt is None:
            out.dt = case.dt * case.cells / out.cells
        if out.t_final is None:
            out.t_final = case.t_final
        if out.target is None:
            out.target = case.target
        out.validate()
        return out

    def validate(self):
        case = get_case(self.problem)
        if self.cells is None or self.cells < 2:
            raise ConfigError("cells: must be an integer >= 2")
        for key in ("dt", "t_final", "delta", "fdi_tolerance"):
            val = getattr(self, key)
            if val is None or not (val > 0.0 and math.isfinite(val)):
                raise ConfigError(f"{key}: must be a positive number")
        if self.target not in TARGETS:
            raise ConfigError(f"target: must be one of {', '.join(TARGETS)}")
        if self.target == "roe" and (case.dim != 1 or self.problem.startswith("kpp")):
            raise ConfigError("target: roe is only available for 1D systems")
        if self.entropy_fix not in ENTROPY_FIXES:
            raise ConfigError(f"entropy_fix: must be one of {', '.join(ENTROPY_FIXES)}")
        if self.bound not in ("ec", "ed"):
            raise ConfigError("bound: must be ec or ed")
        if self.audit_stride < 1:
            raise ConfigError("audit_stride: must be >= 1")
        if self.cfl_policy not in ("warn", "abort", "ignore"):
            raise ConfigError("cfl_policy: must be warn, abort or ignore")
        if self.dt_scaling not in ("linear", "quadratic"):
            raise ConfigError("dt_scaling: must be linear or quadratic")
        if self.fdi_max_iterations < 1:
            raise ConfigError("fdi_max_iterations: must be >= 1")

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, raw, lineno):
    kind = _TYPES[key]
    try:
        if "bool" in kind:
            return _BOOL[raw.lower()]
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"line {lineno}: invalid value {raw!r} for key {key!r}") from None
    return raw.lower() if key in ("target", "entropy_fix", "bound", "cfl_policy", "dt_scaling") else raw


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a resolved config."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw, lineno)
    if "problem" not in values:
        raise ConfigError("missing required key 'problem'")
    return RunConfig(**values).resolve()


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)
