"""Command-line entry points.

Exit codes are part of the contract: 0 success, 1 configuration or input
error, 2 worker/protocol error, 3 I/O error.  The PROMPTEVO_WORKER
environment variable overrides the worker command from the config file.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import shlex
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import yaml

from .bridge import WorkerError, connect_worker
from .core import Candidate, ConfigError, RunConfig, WorkerSpec, derive_seed, validate_config
from .engine import evolve, update_archive
from .metrics import hypervolume
from .objectives import ContractViolation, evaluate_candidate, is_feasible
from .runio import RunWriter, baseline_row, load_run, verify_run
from .variation import GeneratorError, candidate_id

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_WORKER = 2
EXIT_IO = 3


def _load_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError([f"config file not found: {path}"])
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    config = validate_config(raw)
    override = os.environ.get("PROMPTEVO_WORKER")
    if override:
        worker = WorkerSpec("command", command=tuple(shlex.split(override)))
        config = validate_config({**config.to_dict(), "worker": worker.to_config_value()})
    return config


def cmd_evolve(config_path: str, out_dir: str, jobs: int = 1) -> int:
    try:
        config = _load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(out_dir, exist_ok=True)
        writer = RunWriter(out_dir, config, "evolve")
    except OSError as exc:
        print(f"cannot write run directory: {exc}", file=sys.stderr)
        return EXIT_IO
    close = lambda: None
    try:
        generator, evaluator, close = connect_worker(config)
        state = evolve(config, generator, evaluator, sink=writer.on_state, jobs=jobs)
        writer.finalize(state.archive)
    except (WorkerError, GeneratorError, ContractViolation) as exc:
        # persist partial state before reporting the failure
        writer.finalize(writer.rows and _last_archive(out_dir) or [])
        print(f"worker error: {exc}", file=sys.stderr)
        return EXIT_WORKER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        close()
    return EXIT_OK


def _last_archive(out_dir: str) -> list[Candidate]:
    gen_dir = os.path.join(out_dir, "generations")
    names = sorted(os.listdir(gen_dir)) if os.path.isdir(gen_dir) else []
    if not names:
        return []
    with open(os.path.join(gen_dir, names[-1]), encoding="utf-8") as fh:
        snap = json.load(fh)
    return [Candidate.from_dict(d) for d in snap["archive"]]


def run_baseline(
    config: RunConfig,
    samples: int,
    writer: RunWriter,
    generator,
    evaluator,
    alt_prompts: Optional[Sequence[str]] = None,
    jobs: int = 1,
) -> list[Candidate]:
    """Matched-budget brute force: independent draws, no mutation.

    Alternate prompts, when given, are cycled round-robin for generation;
    the deviation constraint is always measured against the main prompt.
    """
    prompts = list(alt_prompts) if alt_prompts else [config.prompt]

    def _draw(i: int) -> Candidate:
        seed = derive_seed(config.run_seed, 0, i)
        genotype, phenotype = generator.generate(prompts[i % len(prompts)], seed)
        cand = Candidate(
            id=candidate_id(0, i),
            genotype=genotype,
            phenotype=phenotype,
            generation_born=0,
        )
        return evaluate_candidate(cand, evaluator, config)

    if jobs <= 1:
        candidates = [_draw(i) for i in range(samples)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            candidates = list(pool.map(_draw, range(samples)))

    # checkpoints aligned with the evolve budget curve: mu, mu+lam, ...
    checkpoints = []
    k = min(config.mu, samples)
    while k < samples:
        checkpoints.append(k)
        k += config.lam
    checkpoints.append(samples)

    archive: list[Candidate] = []
    feasible_total = 0
    prev = 0
    for step, k in enumerate(checkpoints):
        block = candidates[prev:k]
        prev = k
        feasible_block = [c for c in block if is_feasible(c, config.bound)]
        feasible_total += len(feasible_block)
        archive = update_archive(archive, feasible_block)
        row = baseline_row(step, k, feasible_total, archive, config)
        writer.write_step(step, k, block, archive, row)
    writer.finalize(archive)
    return archive


def cmd_baseline(
    config_path: str,
    out_dir: str,
    samples: Optional[int] = None,
    alt_prompts_path: Optional[str] = None,
    jobs: int = 1,
) -> int:
    try:
        config = _load_config(config_path)
        if samples is None:
            samples = config.mu + config.lam * config.max_generations
        if samples < 1:
            raise ConfigError(["samples must be >= 1"])
        alt_prompts = None
        if alt_prompts_path:
            if not os.path.exists(alt_prompts_path):
                raise ConfigError([f"alt-prompts file not found: {alt_prompts_path}"])
            with open(alt_prompts_path, encoding="utf-8") as fh:
                alt_prompts = [ln.strip() for ln in fh if ln.strip()]
            if not alt_prompts:
                raise ConfigError(["alt-prompts file is empty"])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(out_dir, exist_ok=True)
        writer = RunWriter(out_dir, config, "baseline")
    except OSError as exc:
        print(f"cannot write run directory: {exc}", file=sys.stderr)
        return EXIT_IO
    close = lambda: None
    try:
        generator, evaluator, close = connect_worker(config)
        run_baseline(config, samples, writer, generator, evaluator, alt_prompts, jobs)
    except (WorkerError, GeneratorError, ContractViolation) as exc:
        print(f"worker error: {exc}", file=sys.stderr)
        return EXIT_WORKER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        close()
    return EXIT_OK


def _load_front(path: str) -> list[tuple[float, ...]]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        return []
    if path.endswith(".json") or text.lstrip()[0] in "[{":
        data = json.loads(text)
        points = []
        for entry in data:
            if isinstance(entry, dict):
                if entry.get("objectives") is None:
                    raise ValueError(f"candidate {entry.get('id')} has no objectives")
                points.append(tuple(float(v) for v in entry["objectives"]))
            else:
                points.append(tuple(float(v) for v in entry))
        return points
    points = []
    for row in csv.reader(text.splitlines()):
        if not row:
            continue
        try:
            points.append(tuple(float(v) for v in row))
        except ValueError:
            if points:
                raise
            continue  # header line
    return points


def cmd_hv(front_path: str, reference: Sequence[float], mc_samples: int = 100_000) -> int:
    try:
        points = _load_front(front_path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"cannot read front file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        res = hypervolume(points, tuple(reference), mc_samples=mc_samples, mc_seed=0)
    except ValueError as exc:
        print(f"hypervolume error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if res.mc_stderr is not None:
        print(f"{res.value:.12g} (monte-carlo, stderr {res.mc_stderr:.3g})")
    else:
        print(f"{res.value:.12g}")
    return EXIT_OK


def report_runs(run_dirs: Sequence[str]) -> dict:
    """Aggregate metrics across run directories.

    Returns combined rows plus, when both methods are present, the first
    evaluation budget at which median evolution HV exceeds median
    baseline HV.
    """
    runs = [load_run(d) for d in run_dirs]
    qs = {r["config"].q for r in runs}
    if len(qs) != 1:
        raise ValueError(f"incompatible objective counts across runs: {sorted(qs)}")
    combined = []
    series: dict[str, dict[int, list[float]]] = {}
    finals: dict[str, list[float]] = {}
    for r in runs:
        method = r["meta"]["method"]
        seed = r["config"].run_seed
        for row in r["rows"]:
            evals = int(row["evaluations"])
            hv = float(row["hypervolume"])
            combined.append(
                {"method": method, "seed": seed, "evaluations": evals, "hypervolume": hv}
            )
            series.setdefault(method, {}).setdefault(evals, []).append(hv)
        finals.setdefault(method, []).append(float(r["rows"][-1]["hypervolume"]))
    summary = {
        "methods": {m: {"runs": len(v), "median_final_hv": statistics.median(v)}
                    for m, v in finals.items()},
        "crossover_budget": None,
    }
    if "evolve" in series and "baseline" in series:
        budgets = sorted(set(series["evolve"]) & set(series["baseline"]))
        for k in budgets:
            if statistics.median(series["evolve"][k]) > statistics.median(series["baseline"][k]):
                summary["crossover_budget"] = k
                break
    return {"combined": combined, "summary": summary}


def cmd_report(run_dirs: Sequence[str], csv_path: Optional[str] = None) -> int:
    if not run_dirs:
        print("usage: promptevo report RUN_DIR [RUN_DIR ...]", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = report_runs(run_dirs)
    except (OSError, ValueError, KeyError, ConfigError) as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if csv_path:
        try:
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["method", "seed", "evaluations", "hypervolume"])
                for row in result["combined"]:
                    w.writerow([row["method"], row["seed"], row["evaluations"],
                                repr(row["hypervolume"])])
        except OSError as exc:
            print(f"cannot write csv: {exc}", file=sys.stderr)
            return EXIT_IO
    summary = result["summary"]
    for method, info in sorted(summary["methods"].items()):
        print(f"{method}: {info['runs']} run(s), median final hypervolume "
              f"{info['median_final_hv']:.6g}")
    if len(summary["methods"]) > 1:
        k = summary["crossover_budget"]
        if k is None:
            print("crossover budget: none (evolution never exceeds baseline median)")
        else:
            print(f"crossover budget: {k} evaluations")
    return EXIT_OK


def cmd_verify(run_dir: str) -> int:
    try:
        problems = verify_run(run_dir)
    except (OSError, ValueError, KeyError, ConfigError, json.JSONDecodeError) as exc:
        print(f"verify error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if problems:
        for p in problems:
            print(f"mismatch: {p}", file=sys.stderr)
        return EXIT_CONFIG
    print("ok: metrics match recomputation from snapshots")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="promptevo",
        description="multi-objective evolution of generator outputs under a prompt-deviation constraint",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run the evolutionary loop")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("baseline", help="matched-budget brute-force sampling")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--alt-prompts", default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("hv", help="hypervolume of a stored front")
    p.add_argument("--front", required=True)
    p.add_argument("--ref", required=True, help="comma-separated reference point")
    p.add_argument("--mc-samples", type=int, default=100_000)

    p = sub.add_parser("report", help="combine runs into a comparison summary")
    p.add_argument("dirs", nargs="*")
    p.add_argument("--csv", default=None)

    p = sub.add_parser("verify", help="recompute metrics from snapshots")
    p.add_argument("--run", required=True)

    args = parser.parse_args(argv)
    if args.command == "evolve":
        return cmd_evolve(args.config, args.out, jobs=args.jobs)
    if args.command == "baseline":
        return cmd_baseline(
            args.config, args.out,
            samples=args.samples,
            alt_prompts_path=args.alt_prompts,
            jobs=args.jobs,
        )
    if args.command == "hv":
        try:
            reference = tuple(float(x) for x in args.ref.split(","))
        except ValueError:
            print("invalid --ref; expected comma-separated numbers", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_hv(args.front, reference, mc_samples=args.mc_samples)
    if args.command == "report":
        return cmd_report(args.dirs, csv_path=args.csv)
    if args.command == "verify":
        return cmd_verify(args.run)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
