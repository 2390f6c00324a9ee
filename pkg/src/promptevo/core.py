"""Domain types and run configuration.

Everything here is immutable after construction and safe to share across
threads.  Candidates carry opaque genotype payloads that the engine
never interprets; only the generator that minted them knows the layout.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from .rng import derive_seed  # re-exported: the determinism contract lives here

__all__ = [
    "ConfigError",
    "Genotype",
    "PhenotypeRef",
    "Candidate",
    "WorkerSpec",
    "RunConfig",
    "validate_config",
    "derive_seed",
    "SELECTION_STREAM",
]

# birth-index namespace reserved for per-generation auxiliary RNG streams
# (tournament draws); candidate birth indices stay far below this.
SELECTION_STREAM = 1 << 62


class ConfigError(ValueError):
    """Invalid run configuration; carries every violation found."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Genotype:
    payload: bytes
    seed: int  # 64-bit randomness root for this candidate

    def __post_init__(self):
        if not (0 <= self.seed < (1 << 64)):
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class PhenotypeRef:
    id: str
    dims: Optional[tuple[int, int, int]] = None  # (height, width, channels)

    def __post_init__(self):
        if not self.id:
            raise ValueError("phenotype id must be non-empty")
        if self.dims is not None and any(d <= 0 for d in self.dims):
            raise ValueError("phenotype dims must be strictly positive")


@dataclass(frozen=True)
class Candidate:
    id: str
    genotype: Genotype
    phenotype: PhenotypeRef
    generation_born: int
    parent_id: Optional[str] = None
    objectives: Optional[tuple[float, ...]] = None
    deviation: Optional[float] = None

    def __post_init__(self):
        if self.generation_born < 0:
            raise ValueError("generation_born must be >= 0")
        if (self.parent_id is None) != (self.generation_born == 0):
            raise ValueError("parent_id must be absent iff generation_born == 0")
        if self.deviation is not None and self.deviation < 0:
            raise ValueError("deviation must be >= 0")

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "genotype": {
                "payload": base64.b64encode(self.genotype.payload).decode("ascii"),
                "seed": self.genotype.seed,
            },
            "phenotype": {
                "id": self.phenotype.id,
                "dims": list(self.phenotype.dims) if self.phenotype.dims else None,
            },
            "generation_born": self.generation_born,
            "parent_id": self.parent_id,
            "objectives": list(self.objectives) if self.objectives is not None else None,
            "deviation": self.deviation,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Candidate":
        dims = d["phenotype"].get("dims")
        return cls(
            id=d["id"],
            genotype=Genotype(
                payload=base64.b64decode(d["genotype"]["payload"]),
                seed=int(d["genotype"]["seed"]),
            ),
            phenotype=PhenotypeRef(id=d["phenotype"]["id"], dims=tuple(dims) if dims else None),
            generation_born=int(d["generation_born"]),
            parent_id=d.get("parent_id"),
            objectives=tuple(d["objectives"]) if d.get("objectives") is not None else None,
            deviation=d.get("deviation"),
        )


@dataclass(frozen=True)
class WorkerSpec:
    kind: str  # "builtin" | "command" | "tcp"
    command: tuple[str, ...] = ()
    address: str = ""

    def to_config_value(self):
        if self.kind == "builtin":
            return "builtin"
        if self.kind == "command":
            return {"command": list(self.command)}
        return {"tcp": self.address}


@dataclass(frozen=True)
class RunConfig:
    prompt: str
    labels: tuple[str, ...]
    mu: int = 30
    lam: int = 30  # offspring per generation ("lambda" in config files)
    max_generations: int = 20
    tau: float = 1.0
    bound: float = 0.35
    run_seed: int = 0
    strength: float = 0.6
    worker: WorkerSpec = field(default_factory=lambda: WorkerSpec("builtin"))
    hv_reference: tuple[float, ...] = ()
    hv_mc_samples: int = 100_000
    testbed: Optional[Mapping[str, Any]] = None  # raw spec, parsed by testbed module

    @property
    def q(self) -> int:
        return len(self.labels)

    def to_dict(self) -> dict:
        d = {
            "schema": 1,
            "prompt": self.prompt,
            "labels": list(self.labels),
            "mu": self.mu,
            "lambda": self.lam,
            "max_generations": self.max_generations,
            "tau": self.tau,
            "bound": self.bound,
            "run_seed": self.run_seed,
            "strength": self.strength,
            "worker": self.worker.to_config_value(),
            "hv_reference": list(self.hv_reference),
            "hv_mc_samples": self.hv_mc_samples,
        }
        if self.testbed is not None:
            d["testbed"] = dict(self.testbed)
        return d


def _parse_worker(raw, problems: list[str]) -> WorkerSpec:
    if raw is None or raw == "builtin":
        return WorkerSpec("builtin")
    if isinstance(raw, Mapping):
        if "command" in raw:
            cmd = raw["command"]
            if isinstance(cmd, str):
                cmd = cmd.split()
            if not cmd:
                problems.append("worker command must be non-empty")
                return WorkerSpec("builtin")
            return WorkerSpec("command", command=tuple(str(c) for c in cmd))
        if "tcp" in raw:
            addr = str(raw["tcp"])
            if ":" not in addr:
                problems.append("worker tcp address must be host:port")
            return WorkerSpec("tcp", address=addr)
    problems.append(f"unrecognized worker descriptor: {raw!r}")
    return WorkerSpec("builtin")


def validate_config(raw) -> RunConfig:
    """Build a RunConfig from a parsed config mapping, applying defaults.

    Collects every violated invariant before raising, so a bad file is
    reported in one pass.  Passing an already-valid RunConfig is a no-op
    (defaulting is idempotent).
    """
    if isinstance(raw, RunConfig):
        raw = raw.to_dict()
    if not isinstance(raw, Mapping):
        raise ConfigError(["config must be a mapping"])

    problems: list[str] = []
    known = {
        "schema", "prompt", "labels", "mu", "lambda", "max_generations",
        "tau", "bound", "run_seed", "strength", "worker",
        "hv_reference", "hv_mc_samples", "testbed",
    }
    for key in raw:
        if key not in known:
            problems.append(f"unknown config key: {key}")

    schema = raw.get("schema", 1)
    if schema != 1:
        problems.append(f"unsupported schema version: {schema}")

    prompt = raw.get("prompt")
    if not prompt or not isinstance(prompt, str):
        problems.append("missing prompt")
        prompt = ""

    labels = raw.get("labels") or []
    labels = tuple(str(x) for x in labels)
    if len(labels) == 0:
        problems.append("Q >= 1 required (labels must be non-empty)")

    def _int(key, default, minimum, msg):
        v = raw.get(key, default)
        try:
            v = int(v)
        except (TypeError, ValueError):
            problems.append(f"{key} must be an integer")
            return default
        if v < minimum:
            problems.append(msg)
        return v

    mu = _int("mu", 30, 2, "mu must be >= 2")
    lam = _int("lambda", 30, 1, "lambda must be >= 1")
    max_generations = _int("max_generations", 20, 0, "max_generations must be >= 0")
    run_seed = _int("run_seed", 0, 0, "run_seed must be >= 0")
    hv_mc_samples = _int("hv_mc_samples", 100_000, 1000, "hv_mc_samples must be >= 1000")
    if not (0 <= run_seed < (1 << 64)):
        problems.append("run_seed must fit in 64 bits")

    def _float(key, default):
        v = raw.get(key, default)
        try:
            return float(v)
        except (TypeError, ValueError):
            problems.append(f"{key} must be a number")
            return default

    tau = _float("tau", 1.0)
    if tau <= 0:
        problems.append("tau must be > 0")
    bound = _float("bound", 0.35)
    if bound <= 0:
        problems.append("bound must be > 0")
    strength = _float("strength", 0.6)
    if not (0.0 <= strength <= 1.0):
        problems.append("strength must be in [0, 1]")

    worker = _parse_worker(raw.get("worker"), problems)

    hv_reference = raw.get("hv_reference")
    if hv_reference is None:
        hv_reference = (0.0,) * len(labels)
    else:
        hv_reference = tuple(float(x) for x in hv_reference)
        if labels and len(hv_reference) != len(labels):
            problems.append("hv_reference length must equal number of labels")

    testbed = raw.get("testbed")
    if testbed is not None and not isinstance(testbed, Mapping):
        problems.append("testbed must be a mapping")
        testbed = None

    if problems:
        raise ConfigError(problems)

    return RunConfig(
        prompt=prompt,
        labels=labels,
        mu=mu,
        lam=lam,
        max_generations=max_generations,
        tau=tau,
        bound=bound,
        run_seed=run_seed,
        strength=strength,
        worker=worker,
        hv_reference=hv_reference,
        hv_mc_samples=hv_mc_samples,
        testbed=dict(testbed) if testbed is not None else None,
    )
