"""Flat ``key = value`` configuration with defaults for every pipeline stage.

Values use TOML-like literals: numbers, ``true``/``false``, quoted or bare
strings, and ``[a, b, ...]`` lists. ``#`` starts a comment. The file path
comes from ``--config`` or the ``WEARAUTH_CONFIG`` environment variable.
"""

import ast
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from wearauth import ANALYSIS_RATE
from wearauth.errors import ConfigError

ENV_VAR = "WEARAUTH_CONFIG"


@dataclass(frozen=True)
class Config:
    data_dir: str = "wearauth-data"
    output_dir: str = "wearauth-out"
    noise_dir: Optional[str] = None
    sample_rate: int = ANALYSIS_RATE
    window_len: int = 10
    window_step: int = 5
    events_per_subject: int = 6
    augment_pitch: bool = True
    augment_speed: bool = True
    augment_noise: bool = True
    k: int = 20
    nu: float = 0.5
    theta: float = 0.52
    tau_move: float = 0.5
    seed: int = 0
    tol: float = 1e-3
    grid_search: bool = False
    grid_gamma: list = field(default_factory=lambda: [round(0.01 * i, 2) for i in range(1, 11)])
    grid_C: list = field(default_factory=lambda: [float(c) for c in range(1, 17)])
    grid_k: list = field(default_factory=lambda: list(range(1, 41)))
    grid_trees: list = field(default_factory=lambda: [150, 300, 450, 600])
    grid_degree: list = field(default_factory=lambda: [1, 2, 3, 4])
    jobs: int = 1
    synth_subjects: int = 10
    synth_separation: float = 3.0
    sedentary_fraction: float = 0.5

    def grids(self):
        return {
            "svm-rbf": {"gamma": list(self.grid_gamma), "C": list(self.grid_C)},
            "svm-poly": {"degree": list(self.grid_degree), "C": list(self.grid_C)},
            "knn": {"k": list(self.grid_k)},
            "rf": {"n_estimators": list(self.grid_trees)},
            "nb": {},
        }


KEYS = {f.name: f for f in fields(Config)}


def _parse_value(raw):
    text = raw.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null", ""):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _coerce(key, value):
    default = getattr(Config(), key)
    kind = type(default)
    if value is None:
        return None
    if kind is bool and not isinstance(value, bool):
        raise ConfigError(f"config key {key!r} expects true/false, got {value!r}")
    if kind is int and not isinstance(value, bool):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if not isinstance(value, int):
            raise ConfigError(f"config key {key!r} expects an integer, got {value!r}")
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is list and not isinstance(value, (list, tuple)):
        raise ConfigError(f"config key {key!r} expects a list, got {value!r}")
    if kind is float and not isinstance(value, float):
        raise ConfigError(f"config key {key!r} expects a number, got {value!r}")
    if kind is str:
        return str(value)
    return list(value) if kind is list else value


def parse_config(text, base=None, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, _parse_value(raw))
    return replace(base or Config(), **values)


def load_config(path=None):
    """Read the config file at ``path`` (or ``$WEARAUTH_CONFIG``); defaults if neither is set."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return Config()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} not found")
    return parse_config(p.read_text(encoding="utf-8"), source=str(p))


def with_overrides(config, **overrides):
    """Apply non-None overrides (from command-line flags)."""
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})


def describe():
    """Key reference for ``--help``."""
    return "\n".join(f"  {name} = {getattr(Config(), name)!r}" for name in KEYS)
