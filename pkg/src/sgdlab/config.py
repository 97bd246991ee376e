"""Versioned experiment configuration stored as JSON."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from dataclasses import field as dc_field
from typing import Optional

from .errors import ConfigurationError

CONFIG_VERSION = 1
SUBCOMMANDS = ("simulate", "spectrum", "morse", "fp", "decay-study", "verify")
SUITES = ("fast", "full")


@dataclass
class GridPolicy:
    """``half_width = None`` asks for an automatically certified box."""
    n: Optional[int] = None
    half_width: Optional[float] = None

    def to_dict(self):
        return asdict(self)


@dataclass
class DecayParams:
    """Idealized risk ``a s + (b0 - s) exp(-exp(-c/s) t)``."""
    a: float = 1.0
    b0: float = 100.0
    c: float = 0.1

    def to_dict(self):
        return asdict(self)


@dataclass
class ExperimentConfig:
    subcommand: str
    field: str = "double_well_tilted"
    field_params: dict = dc_field(default_factory=dict)
    s: list = dc_field(default_factory=lambda: [0.2])
    grid: GridPolicy = dc_field(default_factory=GridPolicy)
    seed: int = 0
    horizon: float = 10.0
    dt: Optional[float] = None
    n_replicas: int = 1000
    methods: list = dc_field(default_factory=lambda: ["sgd"])
    x0: Optional[list] = None
    initial: str = "uniform"
    decay: DecayParams = dc_field(default_factory=DecayParams)
    suite: str = "fast"
    only: Optional[list] = None
    output: str = "out"
    version: int = CONFIG_VERSION

    def __post_init__(self):
        if isinstance(self.grid, dict):
            self.grid = _from_mapping(GridPolicy, self.grid, "grid")
        if isinstance(self.decay, dict):
            self.decay = _from_mapping(DecayParams, self.decay, "decay")
        if isinstance(self.s, (int, float)):
            self.s = [float(self.s)]
        self.validate()

    def validate(self):
        if self.version != CONFIG_VERSION:
            raise ConfigurationError(
                f"config version {self.version!r} is not supported (expected {CONFIG_VERSION})")
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigurationError(
                f"unknown subcommand {self.subcommand!r}; expected one of {SUBCOMMANDS}")
        if self.suite not in SUITES:
            raise ConfigurationError(f"suite must be one of {SUITES}")
        if not self.s or any(not isinstance(v, (int, float)) or v <= 0 for v in self.s):
            raise ConfigurationError("s must be a non-empty list of positive numbers")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.horizon <= 0 or (self.dt is not None and self.dt <= 0):
            raise ConfigurationError("horizon and dt must be positive")
        if self.n_replicas < 2:
            raise ConfigurationError("n_replicas must be at least 2")
        if self.initial not in ("uniform", "gibbs", "gaussian"):
            raise ConfigurationError("initial must be 'uniform', 'gibbs' or 'gaussian'")

    def to_dict(self):
        d = asdict(self)
        d["grid"] = self.grid.to_dict()
        d["decay"] = self.decay.to_dict()
        return d

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        if "version" not in data:
            raise ConfigurationError("config is missing the 'version' key")
        return _from_mapping(cls, data, "config")

    @classmethod
    def loads(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.loads(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())
        return path


def _from_mapping(cls, data, where):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"bad {where}: {exc}") from None
