"""Generator contract: a frozen stochastic conditional generator acting as
the engine's only variation operator.

Initial candidates come from unconditional prompt-guided sampling; every
later candidate is re-generated conditioned on a selected parent.  The
scalar mutation strength maps onto the denoising-strength knob of
img2img-style re-generation (0 = clone the parent, 1 = fresh sample).
"""

from __future__ import annotations

from typing import Protocol

from .core import Candidate, Genotype, PhenotypeRef, RunConfig, derive_seed

__all__ = ["Generator", "GeneratorError", "spawn_initial", "spawn_offspring", "candidate_id"]


class GeneratorError(RuntimeError):
    """Generator failure, annotated with the birth position that hit it."""

    def __init__(self, message: str, generation: int, birth_index: int):
        super().__init__(f"{message} (generation {generation}, birth index {birth_index})")
        self.generation = generation
        self.birth_index = birth_index


class Generator(Protocol):
    def generate(self, prompt: str, seed: int) -> tuple[Genotype, PhenotypeRef]:
        """Sample a fresh output conditioned on the prompt; pure in (prompt, seed)."""

    def mutate(
        self, prompt: str, parent: Genotype, seed: int, strength: float
    ) -> tuple[Genotype, PhenotypeRef]:
        """Re-generate conditioned on prompt and parent; strength=0 must
        return the parent genotype unchanged."""


def candidate_id(generation: int, birth_index: int) -> str:
    # zero-padded so lexicographic id order equals birth order
    return f"g{generation:04d}-i{birth_index:06d}"


def spawn_initial(config: RunConfig, generator: Generator) -> list[Candidate]:
    """mu unevaluated founders, seeds derived from (run_seed, 0, i)."""
    out = []
    for i in range(config.mu):
        seed = derive_seed(config.run_seed, 0, i)
        try:
            genotype, phenotype = generator.generate(config.prompt, seed)
        except Exception as exc:
            raise GeneratorError(str(exc), 0, i) from exc
        out.append(
            Candidate(
                id=candidate_id(0, i),
                genotype=genotype,
                phenotype=phenotype,
                generation_born=0,
            )
        )
    return out


def spawn_offspring(
    config: RunConfig,
    generator: Generator,
    parent: Candidate,
    generation: int,
    birth_index: int,
) -> Candidate:
    """One unevaluated child of a tournament-selected parent."""
    if generation < 1:
        raise ValueError("offspring require generation >= 1")
    if not parent.evaluated:
        raise ValueError("parent must be evaluated")
    seed = derive_seed(config.run_seed, generation, birth_index)
    try:
        genotype, phenotype = generator.mutate(
            config.prompt, parent.genotype, seed, config.strength
        )
    except Exception as exc:
        raise GeneratorError(str(exc), generation, birth_index) from exc
    return Candidate(
        id=candidate_id(generation, birth_index),
        genotype=genotype,
        phenotype=phenotype,
        generation_born=generation,
        parent_id=parent.id,
    )
