"""Run configuration: one JSON document, every field defaulted."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .deform import DeformConfig
from .driver import DriverConfig


@dataclass
class SeedConfig:
    r: float = 2.0
    side: float = 0.5
    height: float = -2.2
    eps: float = 0.1
    s: float = 0.25


@dataclass
class LabyrinthConfig:
    side: float = 1.0
    N: int = 8
    zeta0: float = 0.3


@dataclass
class RungeConfig:
    alpha: float = 10.0
    index: int = 0
    resolution: int = 1024
    fit_resolution: int = 128


@dataclass
class RunConfig:
    out: str = "runs"
    export_resolution: int = 64
    seed: SeedConfig = field(default_factory=SeedConfig)
    labyrinth: LabyrinthConfig = field(default_factory=LabyrinthConfig)
    runge: RungeConfig = field(default_factory=RungeConfig)
    lemma: DeformConfig = field(default_factory=DeformConfig)
    driver: DriverConfig = field(default_factory=DriverConfig)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name, value in _walk(self):
            if name.endswith("resolution") and not _power_of_two(value):
                raise ValueError(f"{name} must be a power of two (got {value})")
            if name.endswith("tol") and not value > 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self):
        d = asdict(self)
        d["lemma"] = self.lemma.to_dict()
        d["driver"] = {**asdict(self.driver), "lemma": None}
        d["driver"].pop("lemma")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kw = {}
        for f in fields(cls):
            if f.name not in d:
                continue
            v = d[f.name]
            if f.name == "seed":
                v = SeedConfig(**v)
            elif f.name == "labyrinth":
                v = LabyrinthConfig(**v)
            elif f.name == "runge":
                v = RungeConfig(**v)
            elif f.name == "lemma":
                v = DeformConfig.from_dict(v)
            elif f.name == "driver":
                v = DriverConfig(**v)
            kw[f.name] = v
        cfg = cls(**kw)
        cfg.driver.lemma = cfg.lemma
        return cfg

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _power_of_two(n):
    return isinstance(n, int) and n > 0 and n & (n - 1) == 0


def _walk(obj, prefix=""):
    for f in fields(obj):
        v = getattr(obj, f.name)
        if hasattr(v, "__dataclass_fields__"):
            yield from _walk(v, prefix + f.name + ".")
        else:
            yield prefix + f.name, v


def load_config(path=None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
        cfg.driver.lemma = cfg.lemma
        return cfg
    return RunConfig.from_dict(json.loads(Path(path).read_text()))


__all__ = ["RunConfig", "SeedConfig", "LabyrinthConfig", "RungeConfig", "load_config"]
