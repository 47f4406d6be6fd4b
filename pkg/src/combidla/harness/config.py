"""Experiment configuration: kinds, defaults, JSON round trip and hashing."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..rng import DEFAULT_SEED

SCHEMA = "comb-idla/v1"

DEFAULTS: dict[str, dict] = {
    "green": {"rho_grid": [3, 5.5, 10, 40], "oracle_cap": 20000},
    "exit-dist": {"rho_grid": [3, 8, 21], "mc_rho": [3, 8], "samples": 10**6},
    "hitting": {"rho_grid": [3, 10, 50], "kappa_rho": 40, "kappa_x": [0, 10, 20, 30]},
    "flash": {"rho_grid": [8, 10, 12, 16, 24], "ceiling_rho": 10, "band": 0.2},
    "idla": {"n_grid": [10, 20, 40], "snapshot": True},
    "sandpile": {"n_grid": [10, 20, 30], "obstacle_n": [20, 50, 100, 200], "tol": 1e-9},
    "tentacle": {"n": 5, "R_grid": [8, 10, 12], "hard_R": 12, "beta": None},
    "crossing": {"R_grid": [8, 12, 16, 20], "h": 1, "beta": 0.5, "V": "axis"},
    "mu": {"n_grid": [20, 40, 80], "L_grid": [4, 6, 8]},
    "bernoulli": {"xi_grid": [0, 2, 5]},
    "calibrate": {},
}

DEFAULT_REPLICAS: dict[str, int] = {
    "exit-dist": 10**6, "idla": 100, "tentacle": 10**4, "crossing": 10**5, "bernoulli": 10**6,
}

KINDS = tuple(DEFAULTS)


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    replicas: int | None = None
    out: str = "results"
    threads: int = 1

    def __post_init__(self) -> None:
        if self.kind not in DEFAULTS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        merged = copy.deepcopy(DEFAULTS[self.kind])
        merged.update(self.params)
        self.params = merged
        if self.replicas is None:
            self.replicas = DEFAULT_REPLICAS.get(self.kind, 1)
        if self.replicas < 1:
            raise ValueError("replicas must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    def identity(self) -> dict:
        """Fields that determine the results (output location and threads do not)."""
        return {"kind": self.kind, "params": self.params, "seed": self.seed, "replicas": self.replicas}

    @property
    def hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        allowed = {"kind", "params", "seed", "replicas", "out", "threads"}
        extra = set(data) - allowed
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
