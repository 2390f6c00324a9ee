"""Run persistence: per-generation snapshots, metrics.csv, archive.json.

Layout of a run directory:

    run.json                 method ("evolve" | "baseline") and schema tag
    config.yaml              full config snapshot with defaults applied
    generations/gen_NNNN.json  population + archive at each step
    metrics.csv              one row per step, fixed column order
    archive.json             final archive

Snapshots carry enough state to recompute every metrics row, which is
what the verify subcommand does.
"""

from __future__ import annotations

import json
import os
from typing import Optional, Sequence

import yaml

from .core import Candidate, RunConfig, validate_config
from .engine import EvolutionState
from .metrics import HV_STREAM, generation_stats, hypervolume
from .objectives import is_feasible
from .rng import derive_seed

__all__ = ["RunWriter", "load_run", "verify_run", "format_cell", "baseline_row"]


def format_cell(v) -> str:
    # repr() for floats keeps the shortest round-trip form, bit-stable for diffs
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _columns(q: int) -> list[str]:
    return [
        "generation",
        "evaluations",
        "feasible_count",
        "archive_size",
        "hypervolume",
    ] + [f"best_y{i + 1}" for i in range(q)]


def baseline_row(
    generation: int,
    evaluations: int,
    feasible_count: int,
    archive: Sequence[Candidate],
    config: RunConfig,
) -> dict:
    """Metrics row for a brute-force checkpoint (cumulative feasible count)."""
    points = [c.objectives for c in archive]
    for p in points:
        if any(x < r for x, r in zip(p, config.hv_reference)):
            raise ValueError("hv_reference must be weakly dominated by every archived point")
    hv = hypervolume(
        points,
        config.hv_reference,
        mc_samples=config.hv_mc_samples,
        mc_seed=derive_seed(config.run_seed, generation, HV_STREAM),
    )
    row = {
        "generation": generation,
        "evaluations": evaluations,
        "feasible_count": feasible_count,
        "archive_size": len(archive),
        "hypervolume": hv.value,
    }
    for i in range(config.q):
        row[f"best_y{i + 1}"] = max((p[i] for p in points), default=0.0)
    return row


class RunWriter:
    def __init__(self, out_dir: str, config: RunConfig, method: str):
        self.out_dir = out_dir
        self.config = config
        self.method = method
        self.rows: list[dict] = []
        os.makedirs(os.path.join(out_dir, "generations"), exist_ok=True)
        with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as fh:
            json.dump({"schema": 1, "method": method}, fh)
            fh.write("\n")
        with open(os.path.join(out_dir, "config.yaml"), "w", encoding="utf-8") as fh:
            yaml.safe_dump(config.to_dict(), fh, sort_keys=False)

    def write_step(
        self,
        generation: int,
        evaluations: int,
        population: Sequence[Candidate],
        archive: Sequence[Candidate],
        row: dict,
    ) -> None:
        path = os.path.join(self.out_dir, "generations", f"gen_{generation:04d}.json")
        snapshot = {
            "generation": generation,
            "evaluations_used": evaluations,
            "population": [c.to_dict() for c in population],
            "archive": [c.to_dict() for c in archive],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(snapshot, fh)
            fh.write("\n")
        self.rows.append(row)

    def on_state(self, state: EvolutionState) -> None:
        row = generation_stats(state, self.config)
        self.write_step(
            state.generation,
            state.evaluations_used,
            state.population,
            state.archive,
            row,
        )

    def finalize(self, archive: Sequence[Candidate]) -> None:
        cols = _columns(self.config.q)
        with open(os.path.join(self.out_dir, "metrics.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for row in self.rows:
                fh.write(",".join(format_cell(row[c]) for c in cols) + "\n")
        with open(os.path.join(self.out_dir, "archive.json"), "w", encoding="utf-8") as fh:
            json.dump([c.to_dict() for c in archive], fh)
            fh.write("\n")


def load_run(run_dir: str) -> dict:
    with open(os.path.join(run_dir, "run.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(os.path.join(run_dir, "config.yaml"), encoding="utf-8") as fh:
        config = validate_config(yaml.safe_load(fh))
    rows = []
    with open(os.path.join(run_dir, "metrics.csv"), encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            if line.strip():
                rows.append(dict(zip(header, line.strip().split(","))))
    return {"meta": meta, "config": config, "rows": rows, "dir": run_dir}


def _load_snapshots(run_dir: str) -> list[dict]:
    gen_dir = os.path.join(run_dir, "generations")
    out = []
    for name in sorted(os.listdir(gen_dir)):
        with open(os.path.join(gen_dir, name), encoding="utf-8") as fh:
            out.append(json.load(fh))
    return out


def verify_run(run_dir: str) -> list[str]:
    """Recompute every metrics row from the snapshots; return mismatches."""
    run = load_run(run_dir)
    config: RunConfig = run["config"]
    method = run["meta"]["method"]
    snapshots = _load_snapshots(run_dir)
    problems: list[str] = []
    if len(snapshots) != len(run["rows"]):
        problems.append(
            f"row count {len(run['rows'])} != snapshot count {len(snapshots)}"
        )
        return problems
    cols = _columns(config.q)
    cumulative_feasible = 0
    for snap, stored in zip(snapshots, run["rows"]):
        population = [Candidate.from_dict(d) for d in snap["population"]]
        archive = [Candidate.from_dict(d) for d in snap["archive"]]
        if method == "baseline":
            cumulative_feasible += sum(1 for c in population if is_feasible(c, config.bound))
            row = baseline_row(
                snap["generation"],
                snap["evaluations_used"],
                cumulative_feasible,
                archive,
                config,
            )
        else:
            state = EvolutionState(
                snap["generation"], population, archive, snap["evaluations_used"]
            )
            row = generation_stats(state, config)
        for col in cols:
            want = format_cell(row[col])
            got = stored.get(col)
            if got != want:
                problems.append(
                    f"generation {snap['generation']}, column {col}: stored {got} != recomputed {want}"
                )
    return problems
