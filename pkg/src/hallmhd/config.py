"""Experiment configuration: one JSON document per job."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigurationError, StorageError
from .field import GridSpec
from .initial_data import InitialDataSpec
from .lp import NormSpec
from .schemas import KINDS, validate_config
from .solver import SolverConfig

SEED_ENV = "HALLMHD_SEED"

_JOB_DEFAULTS = {
    "estimate": {"alpha": 2.0, "k_cut": 2},
    "contraction": {"k_cut": 2},
    "scaling": {"lam": 2.0, "mode": "mild"},
    "uniqueness": {"epsilons": [1e-2, 1e-3, 1e-4]},
    "consistency": {"tolerance": 1e-6},
    "solve_global": {"snapshot_stride": 0},
    "solve_local": {"snapshot_stride": 0},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved job description.

    ``seed`` is the master seed: it drives the random initial data and every
    sampled quantity of the job.  ``job`` holds the kind-specific options.
    """

    kind: str
    grid: GridSpec = GridSpec()
    solver: SolverConfig = SolverConfig()
    norm: NormSpec = NormSpec.critical()
    initial_data: InitialDataSpec = InitialDataSpec()
    seed: int = 0
    output_dir: str = "output"
    job: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown job kind {self.kind!r}")
        if self.solver.norm_spec != self.norm:
            object.__setattr__(self, "solver", replace(self.solver, norm_spec=self.norm))
        job = {**_JOB_DEFAULTS.get(self.kind, {}), **self.job}
        object.__setattr__(self, "job", job)
        if self.initial_data.preset is not None and self.initial_data.seed != self.seed:
            object.__setattr__(self, "initial_data", replace(self.initial_data, seed=self.seed))

    def to_dict(self, include_output: bool = True) -> dict:
        init = self.initial_data.to_dict()
        init.pop("seed")
        solver = self.solver.to_dict()
        solver.pop("norm_spec")
        d = {
            "kind": self.kind,
            "seed": self.seed,
            "grid": self.grid.to_dict(),
            "solver": solver,
            "norm": self.norm.to_dict(),
            "initial_data": init,
            "job": dict(sorted(self.job.items())),
        }
        if include_output:
            d["output_dir"] = self.output_dir
        return d

    def to_json(self, include_output: bool = True) -> str:
        return json.dumps(self.to_dict(include_output), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        validate_config(doc)
        d = dict(doc)
        try:
            norm = NormSpec.from_dict(d["norm"]) if "norm" in d else NormSpec.critical()
            solver = SolverConfig.from_dict({**d.get("solver", {}), "norm_spec": norm.to_dict()})
            seed = int(d.get("seed", 0))
            init = InitialDataSpec.from_dict({**d.get("initial_data", {}), "seed": seed})
            return cls(
                kind=d["kind"],
                grid=GridSpec.from_dict(d["grid"]) if "grid" in d else GridSpec(),
                solver=solver,
                norm=norm,
                initial_data=init,
                seed=seed,
                output_dir=d.get("output_dir", "output"),
                job=dict(d.get("job", {})),
            )
        except (TypeError, KeyError) as exc:
            raise ConfigurationError(f"config invalid: {exc}") from None

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed, initial_data=replace(self.initial_data, seed=seed))


def load_config(path, env=None) -> ExperimentConfig:
    """Read, validate and resolve a config file; ``HALLMHD_SEED`` overrides its seed."""
    env = os.environ if env is None else env
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise StorageError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    cfg = ExperimentConfig.from_dict(doc)
    raw = env.get(SEED_ENV)
    if raw not in (None, ""):
        try:
            seed = int(raw)
        except ValueError:
            raise ConfigurationError(f"{SEED_ENV} must be an integer, got {raw!r}") from None
        if seed < 0:
            raise ConfigurationError(f"{SEED_ENV} must be non-negative")
        cfg = cfg.with_seed(seed)
    return cfg
