"""promptevo: multi-objective evolution of stochastic generator outputs
under a prompt-deviation constraint, with a matched-budget brute-force
baseline and hypervolume reporting."""

from .core import (
    Candidate,
    ConfigError,
    Genotype,
    PhenotypeRef,
    RunConfig,
    WorkerSpec,
    derive_seed,
    validate_config,
)
from .engine import EvolutionState, FrontPartition, evolve
from .metrics import HypervolumeResult, hypervolume, hypervolume_exact, hypervolume_mc, pareto_front
from .objectives import deviation, evaluate_candidate, is_feasible
from .testbed import TestbedSpec, TestbedWorker, default_spec

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "ConfigError",
    "Genotype",
    "PhenotypeRef",
    "RunConfig",
    "WorkerSpec",
    "derive_seed",
    "validate_config",
    "EvolutionState",
    "FrontPartition",
    "evolve",
    "HypervolumeResult",
    "hypervolume",
    "hypervolume_exact",
    "hypervolume_mc",
    "pareto_front",
    "deviation",
    "evaluate_candidate",
    "is_feasible",
    "TestbedSpec",
    "TestbedWorker",
    "default_spec",
    "__version__",
]
