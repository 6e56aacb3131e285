"""Campaign configuration: ``key=value`` text files and seed directories."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from ..cutloss import Mode
from ..distance import DEFAULT_C_MULT
from ..scheduler import DEFAULT_BASE_ENERGY
from ..vm import DEFAULT_MAX_INPUT, DEFAULT_STEP_LIMIT


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    graph: Path
    seeds: Path
    p: float = 0.0
    mode: Mode = Mode.ALWAYS
    t_x: float = 50_000
    budget: float = 200_000
    trials: int = 1
    rng_seed: int = 0
    granularity: int = 10
    c_mult: int = DEFAULT_C_MULT
    base_energy: int = DEFAULT_BASE_ENERGY
    schedule: str = "exp"
    time_mode: str = "virtual"
    step_limit: int = DEFAULT_STEP_LIMIT
    max_len: int = DEFAULT_MAX_INPUT
    stop_on_target: bool = False
    distances: Optional[Path] = None
    map_size: int = 1 << 16
    jobs: int = 1

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", _enum(Mode, self.mode, "mode"))
        if not 0 <= self.p <= 1:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.budget < 0:
            raise ConfigError("budget must be >= 0")
        if self.t_x <= 0:
            raise ConfigError("t_x must be positive")
        if self.granularity < 1:
            raise ConfigError("granularity must be >= 1")
        if self.c_mult < 1:
            raise ConfigError("c_mult must be a positive integer")
        if self.schedule != "exp":
            raise ConfigError(f"unsupported schedule {self.schedule!r}")
        if self.time_mode not in ("virtual", "wall"):
            raise ConfigError(f"time_mode must be 'virtual' or 'wall', got {self.time_mode!r}")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be an unsigned integer")
        if self.max_len < 0 or self.step_limit < 1:
            raise ConfigError("max_len must be >= 0 and step_limit >= 1")

    def with_(self, **changes) -> "CampaignConfig":
        return replace(self, **changes)


def _enum(cls, value: str, key: str):
    try:
        return cls(value.lower())
    except ValueError:
        allowed = "|".join(m.value for m in cls)
        raise ConfigError(f"{key} must be one of {allowed}, got {value!r}") from None


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


_CONVERTERS = {
    "p": float, "t_x": float, "budget": float, "trials": int, "rng_seed": int,
    "granularity": int, "c_mult": int, "base_energy": int, "step_limit": int,
    "max_len": int, "map_size": int, "jobs": int, "stop_on_target": _bool,
    "mode": str, "schedule": str, "time_mode": str,
}
_PATH_KEYS = ("graph", "seeds", "distances")


def parse_config(text: str, base_dir: str | os.PathLike = ".") -> CampaignConfig:
    values: dict = {}
    base = Path(base_dir)
    known = {f.name for f in fields(CampaignConfig)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key in _PATH_KEYS:
            path = Path(value)
            values[key] = path if path.is_absolute() else base / path
            continue
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    for key in ("graph", "seeds"):
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    return CampaignConfig(**values)


def load_config(path: str | os.PathLike) -> CampaignConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent)


def format_config(cfg: CampaignConfig) -> str:
    lines = []
    for f in fields(CampaignConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, Mode):
            v = v.value
        elif isinstance(v, bool):
            v = str(v).lower()
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


def load_seeds(directory: str | os.PathLike, max_len: int = DEFAULT_MAX_INPUT) -> list[bytes]:
    """Raw seed files, one input per file, in filename order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"seed directory {directory} does not exist")
    seeds = []
    try:
        for entry in sorted(directory.iterdir(), key=lambda p: p.name):
            if entry.is_file() and not entry.name.startswith("."):
                seeds.append(entry.read_bytes()[:max_len])
    except OSError as exc:
        raise ConfigError(f"cannot read seeds from {directory}: {exc}") from None
    if not seeds:
        raise ConfigError(f"seed directory {directory} is empty")
    return seeds
