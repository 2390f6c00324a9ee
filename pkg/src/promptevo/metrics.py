"""Hypervolume indicator and per-generation front statistics.

Objectives are maximized; the hypervolume of a set is the measure of the
region between the reference point and the attained front.  Exact sweeps
cover Q=2 and Q=3; higher Q falls back to Monte Carlo estimation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import RunConfig, derive_seed
from .engine import EvolutionState, dominates
from .objectives import is_feasible

__all__ = [
    "HypervolumeResult",
    "pareto_front",
    "hypervolume_exact",
    "hypervolume_mc",
    "hypervolume",
    "generation_stats",
    "METRIC_COLUMNS",
]

# auxiliary stream index for the Monte Carlo estimator inside a run
HV_STREAM = (1 << 62) + 1


@dataclass(frozen=True)
class HypervolumeResult:
    value: float
    method: str  # "exact" | "monte-carlo"
    mc_stderr: Optional[float] = None
    discarded: int = 0  # points that did not weakly dominate the reference

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("hypervolume must be >= 0")
        if (self.method == "monte-carlo") != (self.mc_stderr is not None):
            raise ValueError("mc_stderr present iff method is monte-carlo")


def pareto_front(points: Sequence[Sequence[float]]) -> list[int]:
    """Indices of non-dominated points (maximization).

    Duplicates of a retained point are all retained: equal vectors never
    strictly dominate each other.
    """
    out = []
    for i, p in enumerate(points):
        if not any(dominates(q, p) for j, q in enumerate(points) if j != i):
            out.append(i)
    return out


def _gains(points, reference):
    """Translate to reference-relative gains, dropping points that do not
    weakly dominate the reference.  Returns (gains, discarded_count)."""
    gains = []
    discarded = 0
    for p in points:
        if len(p) != len(reference):
            raise ValueError("point/reference dimension mismatch")
        g = tuple(x - r for x, r in zip(p, reference))
        if all(v >= 0 for v in g):
            gains.append(g)
        else:
            discarded += 1
    return gains, discarded


def _union_area_2d(gains) -> float:
    """Area of the union of origin-anchored rectangles [0,x] x [0,y]."""
    pts = sorted(gains)
    if not pts:
        return 0.0
    area = 0.0
    y_star = 0.0
    x_prev = pts[-1][0]
    for x, y in reversed(pts):
        if y > y_star:
            area += (x_prev - x) * y_star
            y_star = y
            x_prev = x
    area += x_prev * y_star
    return area


def hypervolume_exact(
    points: Sequence[Sequence[float]], reference: Sequence[float]
) -> HypervolumeResult:
    """Exact dominated-region measure for Q=2 (sorted sweep) or Q=3
    (sweep over slices along the third objective)."""
    q = len(reference)
    if q not in (2, 3):
        raise ValueError("exact hypervolume supports Q in {2, 3}; use hypervolume_mc")
    gains, discarded = _gains(points, reference)
    if not gains:
        return HypervolumeResult(0.0, "exact", discarded=discarded)
    if q == 2:
        value = _union_area_2d(gains)
    else:
        pts = sorted(gains, key=lambda g: -g[2])
        value = 0.0
        area = 0.0
        active: list[tuple[float, float]] = []
        prev_z = pts[0][2]
        for x, y, z in pts:
            if z < prev_z:
                value += area * (prev_z - z)
                prev_z = z
            active.append((x, y))
            area = _union_area_2d(active)
        value += area * prev_z
    return HypervolumeResult(value, "exact", discarded=discarded)


def hypervolume_mc(
    points: Sequence[Sequence[float]],
    reference: Sequence[float],
    samples: int,
    seed: int,
) -> HypervolumeResult:
    """Monte Carlo estimate: uniform sampling in the bounding box between
    the reference and the componentwise maximum of the points."""
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    gains, discarded = _gains(points, reference)
    if not gains:
        return HypervolumeResult(0.0, "monte-carlo", mc_stderr=0.0, discarded=discarded)
    g = np.asarray(gains, dtype=float)
    upper = g.max(axis=0)
    volume = float(np.prod(upper))
    if volume == 0.0:
        return HypervolumeResult(0.0, "monte-carlo", mc_stderr=0.0, discarded=discarded)
    rng = np.random.default_rng(seed)
    u = rng.random((samples, len(upper))) * upper
    # a sample is dominated if some point is >= it in every coordinate
    hits = (u[:, None, :] <= g[None, :, :]).all(axis=2).any(axis=1)
    frac = float(hits.mean())
    stderr = volume * float(np.sqrt(frac * (1.0 - frac) / samples))
    return HypervolumeResult(volume * frac, "monte-carlo", mc_stderr=stderr, discarded=discarded)


def hypervolume(
    points: Sequence[Sequence[float]],
    reference: Sequence[float],
    mc_samples: int = 100_000,
    mc_seed: int = 0,
) -> HypervolumeResult:
    """Exact when Q <= 3, Monte Carlo otherwise."""
    if len(reference) in (2, 3):
        return hypervolume_exact(points, reference)
    return hypervolume_mc(points, reference, mc_samples, mc_seed)


METRIC_COLUMNS = ("generation", "evaluations", "feasible_count", "archive_size", "hypervolume")


def generation_stats(state: EvolutionState, config: RunConfig) -> dict:
    """One metrics row: budget, feasibility, archive size, archive
    hypervolume and per-objective bests over the archive."""
    points = [c.objectives for c in state.archive]
    for p in points:
        if any(x < r for x, r in zip(p, config.hv_reference)):
            raise ValueError(
                "hv_reference must be weakly dominated by every archived point"
            )
    hv = hypervolume(
        points,
        config.hv_reference,
        mc_samples=config.hv_mc_samples,
        mc_seed=derive_seed(config.run_seed, state.generation, HV_STREAM),
    )
    row = {
        "generation": state.generation,
        "evaluations": state.evaluations_used,
        "feasible_count": sum(
            1 for c in state.population if is_feasible(c, config.bound)
        ),
        "archive_size": len(state.archive),
        "hypervolume": hv.value,
    }
    for i in range(config.q):
        best = max((p[i] for p in points), default=0.0)
        row[f"best_y{i + 1}"] = best
    return row
