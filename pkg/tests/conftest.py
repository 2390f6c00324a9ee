"""Shared fixtures and independent brute-force oracles.

The oracles deliberately re-derive domination from first principles
instead of calling engine code, so they stay meaningful as checks."""

import random

import pytest

from promptevo.core import Candidate, Genotype, PhenotypeRef, validate_config


def make_candidate(cid, objectives, dev=0.0, gen=0, parent=None, seed=None):
    return Candidate(
        id=cid,
        genotype=Genotype(payload=cid.encode(), seed=seed if seed is not None else abs(hash(cid)) % (1 << 64)),
        phenotype=PhenotypeRef(id=f"ph-{cid}"),
        generation_born=gen,
        parent_id=parent,
        objectives=tuple(objectives),
        deviation=dev,
    )


def random_population(rng: random.Random, n, q, infeasible_fraction=0.5, bound=0.35):
    pop = []
    for i in range(n):
        objectives = tuple(rng.random() for _ in range(q))
        if rng.random() < infeasible_fraction:
            dev = bound + rng.random()
        else:
            dev = rng.random() * bound
        pop.append(make_candidate(f"c{i:04d}", objectives, dev=dev))
    return pop


# --- oracles -----------------------------------------------------------

def oracle_dominates(a, b):
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def oracle_constrained_dominates(a, b, bound):
    fa, fb = a.deviation <= bound, b.deviation <= bound
    if fa != fb:
        return fa
    if not fa:
        return a.deviation < b.deviation
    return oracle_dominates(a.objectives, b.objectives)


def oracle_partition(pop, bound):
    """Fronts by repeated removal of the non-dominated set."""
    remaining = list(range(len(pop)))
    fronts = []
    while remaining:
        front = [
            i for i in remaining
            if not any(
                oracle_constrained_dominates(pop[j], pop[i], bound)
                for j in remaining if j != i
            )
        ]
        fronts.append(sorted(front))
        remaining = [i for i in remaining if i not in set(front)]
    return fronts


def oracle_pareto(points):
    return [
        i for i, p in enumerate(points)
        if not any(oracle_dominates(q, p) for j, q in enumerate(points) if j != i)
    ]


@pytest.fixture
def small_config():
    return validate_config({
        "prompt": "a scene matching the anchor direction",
        "labels": ["left-bump", "right-bump"],
        "mu": 8,
        "lambda": 8,
        "max_generations": 4,
        "run_seed": 11,
        "testbed": {"q": 2, "dim": 2},
    })


@pytest.fixture
def default_config():
    return validate_config({
        "prompt": "a scene matching the anchor direction",
        "labels": ["left-bump", "right-bump"],
        "run_seed": 1,
        "testbed": {"q": 2, "dim": 2},
    })
