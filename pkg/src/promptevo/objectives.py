"""Evaluation contract: label probabilities as objectives, plus the
prompt-deviation constraint d = tau * (1 - cosine of normalized embeddings)."""

from __future__ import annotations

import dataclasses
from typing import Protocol, Sequence

from .core import Candidate, PhenotypeRef, RunConfig

__all__ = [
    "Evaluator",
    "ContractViolation",
    "deviation",
    "is_feasible",
    "check_objectives",
    "evaluate_candidate",
]


class ContractViolation(RuntimeError):
    """A worker or evaluator returned something outside its contract."""


class Evaluator(Protocol):
    def evaluate(self, phenotype: PhenotypeRef, labels: Sequence[str]) -> Sequence[float]:
        """Probability in [0, 1] per label; exactly len(labels) values."""

    def embed_similarity(self, phenotype: PhenotypeRef, prompt: str) -> float:
        """Cosine of the normalized embeddings of phenotype and prompt."""


def deviation(cosine: float, tau: float) -> float:
    """Prompt deviation tau * (1 - cosine); range [0, 2*tau]."""
    if not (-1.0 <= cosine <= 1.0):
        raise ContractViolation(f"cosine {cosine} outside [-1, 1]")
    if tau <= 0:
        raise ValueError("tau must be > 0")
    return tau * (1.0 - cosine)


def is_feasible(candidate: Candidate, bound: float) -> bool:
    """Deviation within the bound, inclusive."""
    if candidate.deviation is None:
        raise ValueError("candidate not evaluated")
    return candidate.deviation <= bound


def check_objectives(values: Sequence[float], q: int) -> tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if len(values) != q:
        raise ContractViolation(
            f"objective count mismatch: expected {q}, got {len(values)}"
        )
    for i, v in enumerate(values):
        if not (0.0 <= v <= 1.0):
            raise ContractViolation(f"objective {i} value {v} outside [0, 1]")
    return values


def evaluate_candidate(candidate: Candidate, evaluator: Evaluator, config: RunConfig) -> Candidate:
    """Fill in objectives and deviation; a candidate is evaluated exactly once."""
    if candidate.evaluated:
        raise ValueError(f"candidate {candidate.id} already evaluated")
    values = check_objectives(
        evaluator.evaluate(candidate.phenotype, config.labels), config.q
    )
    cosine = float(evaluator.embed_similarity(candidate.phenotype, config.prompt))
    return dataclasses.replace(
        candidate,
        objectives=values,
        deviation=deviation(cosine, config.tau),
    )
