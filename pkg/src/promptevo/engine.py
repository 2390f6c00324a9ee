"""Constrained NSGA-II generational loop.

Selection pressure comes from the label-probability objectives under
Deb's constrained-domination rule (feasible beats infeasible, infeasibles
compare by violation, feasibles by Pareto dominance); variation is
delegated entirely to the generator contract.  Every tie anywhere is
broken by candidate id so runs are reproducible regardless of evaluation
scheduling.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .core import Candidate, RunConfig, SELECTION_STREAM, derive_seed
from .objectives import Evaluator, evaluate_candidate, is_feasible
from .variation import Generator, spawn_initial, spawn_offspring

__all__ = [
    "FrontPartition",
    "EvolutionState",
    "dominates",
    "constrained_dominates",
    "fast_nondominated_sort",
    "crowding_distance",
    "tournament_select",
    "environmental_selection",
    "update_archive",
    "evolve",
]


@dataclass
class FrontPartition:
    fronts: list[list[int]] = field(default_factory=list)  # rank 0 first
    crowding: dict[int, float] = field(default_factory=dict)

    def rank_of(self) -> dict[int, int]:
        return {i: r for r, front in enumerate(self.fronts) for i in front}


@dataclass
class EvolutionState:
    generation: int
    population: list[Candidate]
    archive: list[Candidate]  # feasible, mutually non-dominated, ever seen
    evaluations_used: int


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto dominance under maximization."""
    if len(a) != len(b):
        raise ValueError("objective vectors must have equal length")
    no_worse = all(x >= y for x, y in zip(a, b))
    return no_worse and any(x > y for x, y in zip(a, b))


def constrained_dominates(a: Candidate, b: Candidate, bound: float) -> bool:
    a_ok = is_feasible(a, bound)
    b_ok = is_feasible(b, bound)
    if a_ok != b_ok:
        return a_ok
    if not a_ok:
        return a.deviation < b.deviation
    return dominates(a.objectives, b.objectives)


def fast_nondominated_sort(pop: Sequence[Candidate], bound: float) -> FrontPartition:
    """Deb's fast non-dominated sort under constrained domination.

    Crowding is left unfilled; callers attach it per front.
    """
    n = len(pop)
    if n == 0:
        return FrontPartition()
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    for p in range(n):
        for q in range(p + 1, n):
            if constrained_dominates(pop[p], pop[q], bound):
                dominated_by[p].append(q)
                domination_count[q] += 1
            elif constrained_dominates(pop[q], pop[p], bound):
                dominated_by[q].append(p)
                domination_count[p] += 1
    fronts = [[p for p in range(n) if domination_count[p] == 0]]
    while True:
        nxt = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                domination_count[q] -= 1
                if domination_count[q] == 0:
                    nxt.append(q)
        if not nxt:
            break
        fronts.append(sorted(nxt))
    return FrontPartition(fronts=fronts)


def crowding_distance(front: Sequence[Candidate]) -> dict[int, float]:
    """Crowding distance per position in the front.

    Boundary candidates per objective get +inf; interior ones sum the
    normalized gap between their neighbours.  Objectives with zero range
    contribute nothing; sort ties are broken by candidate id.
    """
    n = len(front)
    if n == 0:
        return {}
    if n <= 2:
        return {i: math.inf for i in range(n)}
    q = len(front[0].objectives)
    dist = {i: 0.0 for i in range(n)}
    for m in range(q):
        order = sorted(range(n), key=lambda i: (front[i].objectives[m], front[i].id))
        lo = front[order[0]].objectives[m]
        hi = front[order[-1]].objectives[m]
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        if hi == lo:
            continue
        for pos in range(1, n - 1):
            i = order[pos]
            if dist[i] == math.inf:
                continue
            gap = front[order[pos + 1]].objectives[m] - front[order[pos - 1]].objectives[m]
            dist[i] += gap / (hi - lo)
    return dist


def _attach_crowding(pop: Sequence[Candidate], partition: FrontPartition) -> None:
    partition.crowding = {}
    for front in partition.fronts:
        local = crowding_distance([pop[i] for i in front])
        for pos, i in enumerate(front):
            partition.crowding[i] = local[pos]


def tournament_select(
    pop: Sequence[Candidate],
    partition: FrontPartition,
    rng: random.Random,
    k: int = 2,
) -> Candidate:
    """k-way tournament on (rank asc, crowding desc, id asc)."""
    if not pop:
        raise ValueError("empty population")
    rank = partition.rank_of()
    best = None
    for _ in range(k):
        i = rng.randrange(len(pop))
        key = (rank[i], -partition.crowding.get(i, 0.0), pop[i].id)
        if best is None or key < best[0]:
            best = (key, i)
    return pop[best[1]]


def environmental_selection(
    pool: Sequence[Candidate], mu: int, bound: float
) -> list[Candidate]:
    """Elitist (mu+lambda) truncation: whole fronts first, then the split
    front by descending crowding distance."""
    pool = list(pool)
    if mu >= len(pool):
        return pool
    partition = fast_nondominated_sort(pool, bound)
    _attach_crowding(pool, partition)
    selected: list[Candidate] = []
    for front in partition.fronts:
        if len(selected) + len(front) <= mu:
            selected.extend(pool[i] for i in front)
            if len(selected) == mu:
                break
        else:
            ordered = sorted(
                front, key=lambda i: (-partition.crowding[i], pool[i].id)
            )
            selected.extend(pool[i] for i in ordered[: mu - len(selected)])
            break
    return selected


def update_archive(archive: Sequence[Candidate], newcomers: Sequence[Candidate]) -> list[Candidate]:
    """Merge feasible newcomers, re-prune to the non-dominated set."""
    merged = list(archive) + list(newcomers)
    keep = []
    for i, c in enumerate(merged):
        if any(
            dominates(other.objectives, c.objectives)
            for j, other in enumerate(merged)
            if j != i
        ):
            continue
        keep.append(c)
    return keep


Sink = Callable[[EvolutionState], None]


def evolve(
    config: RunConfig,
    generator: Generator,
    evaluator: Evaluator,
    sink: Optional[Sink] = None,
    jobs: int = 1,
) -> EvolutionState:
    """Run the full generational loop and return the final state.

    Offspring creation and evaluation within a generation may run
    concurrently (jobs > 1); results are merged by birth index, so the
    outcome is identical to the sequential run.
    """
    issued_seeds: set[int] = set()

    def _register(c: Candidate) -> Candidate:
        if c.genotype.seed in issued_seeds:
            raise RuntimeError(f"duplicate candidate seed {c.genotype.seed}")
        issued_seeds.add(c.genotype.seed)
        return c

    def _pmap(fn, items):
        if jobs <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))

    population = [
        _register(c)
        for c in spawn_initial(config, generator)
    ]
    population = _pmap(lambda c: evaluate_candidate(c, evaluator, config), population)

    archive = update_archive([], [c for c in population if is_feasible(c, config.bound)])
    state = EvolutionState(0, list(population), list(archive), config.mu)
    if sink:
        sink(state)

    for generation in range(1, config.max_generations + 1):
        partition = fast_nondominated_sort(population, config.bound)
        _attach_crowding(population, partition)
        rng = random.Random(derive_seed(config.run_seed, generation, SELECTION_STREAM))
        parents = [
            tournament_select(population, partition, rng) for _ in range(config.lam)
        ]

        def _make_child(birth_index: int) -> Candidate:
            child = spawn_offspring(
                config, generator, parents[birth_index], generation, birth_index
            )
            return evaluate_candidate(child, evaluator, config)

        offspring = _pmap(_make_child, range(config.lam))
        for c in offspring:
            _register(c)

        archive = update_archive(
            archive, [c for c in offspring if is_feasible(c, config.bound)]
        )
        population = environmental_selection(
            list(population) + offspring, config.mu, config.bound
        )
        state = EvolutionState(
            generation,
            list(population),
            list(archive),
            config.mu + generation * config.lam,
        )
        if sink:
            sink(state)

    return state
