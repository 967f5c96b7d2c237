"""Flat ``key = <json value>`` experiment configs.

One key per line; blank lines and ``#`` comments are ignored on input.
:func:`dump_config` writes every field in declaration order, so a dumped
config loads and dumps back to the same bytes.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass
class GenCorpusConfig:
    kind: str = "random_walk"          # random_walk | constant | violation | stopped_walk | cycle
    n_paths: int = 100
    n_steps: int = 256
    step_scale: float = 1e-3           # keep <= the detectors' epsilon (see README)
    dt: float = 1.0
    levels: list = field(default_factory=lambda: [0.0])
    b_grid: list = field(default_factory=lambda: [0.0])
    D_grid: list = field(default_factory=lambda: [1.0])
    a: float = 1.0
    violation: str = "isolated_level_point"
    stop_level: float = 1.0
    epsilon_exponent: int = 4
    seed: int = 0


@dataclass
class DetectConfig:
    corpus: str = "corpus"
    detector: str = "isolated_point"   # isolated_point | monotone | increase
    a_grid: list = field(default_factory=lambda: [0.0, 1.0, 2.0])
    D_grid: list = field(default_factory=lambda: [0.5, 1.0])
    b: float = 0.0
    epsilon: float = 1e-3
    direction: str = "up"
    alarm_factor: float = 100.0
    epsilon_exponent: int = 4
    C: float = 1.0
    D: float = 1.0
    K: float = 2.0
    write_traces: bool = False
    seed: int = 0


@dataclass
class VerifyConfig:
    suites: list = field(default_factory=lambda: ["wlln_tightness", "wlln", "layers", "darboux", "coherence"])
    n_instances: int = 100_000         # game sweep size
    n_samples: int = 1000              # layer and Darboux schedules
    n_paths: int = 1000                # first_process and neutrality corpora
    epsilon_exponents: list = field(default_factory=lambda: [2, 4])
    seed: int = 0


@dataclass
class WllnPlayConfig:
    c: float = 1.0
    N: int = 100
    reality: str = "random"            # fixed | random | extreme | adaptive
    moves: list = field(default_factory=list)
    n_games: int = 1
    seed: int = 0


COMMAND_CONFIGS = {
    "gen-corpus": GenCorpusConfig,
    "detect": DetectConfig,
    "verify": VerifyConfig,
    "wlln-play": WllnPlayConfig,
}


def _check_type(name, value, default):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{name}: expected {type(default).__name__}, got {value!r}")
    return value


def parse_config(text: str, cls):
    """Parse ``text`` into an instance of the dataclass ``cls``."""
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rest = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            value = json.loads(rest.strip())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc.msg}") from None
        values[key] = _check_type(key, value, getattr(defaults, key))
    return cls(**values)


def load_config(path, cls):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), cls)


def dump_config(cfg) -> str:
    return "".join(f"{f.name} = {json.dumps(getattr(cfg, f.name))}\n" for f in dataclasses.fields(cfg))


def config_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def derive_seed(root: int, index: int) -> int:
    """Seed of corpus item ``index``: first 64-bit word of ``SeedSequence([root, index])``."""
    if root < 0 or index < 0:
        raise ConfigError("seeds and indices must be non-negative")
    return int(np.random.SeedSequence([root, index]).generate_state(1, dtype=np.uint64)[0])
