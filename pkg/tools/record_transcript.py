#!/usr/bin/env python3
"""Record the protocol conformance transcript against the builtin
testbed worker.  Output: protocol/conformance_transcript.jsonl with
alternating request / expected-reply lines."""

import io
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from promptevo import wire  # noqa: E402
from promptevo.core import derive_seed  # noqa: E402
from promptevo.testbed import TestbedWorker, default_spec  # noqa: E402
from promptevo.worker import serve  # noqa: E402

PROMPT = "a scene matching the anchor direction"
LABELS = ["left-bump", "right-bump"]


def build_requests() -> list[str]:
    run_seed = 42
    reqs = []
    msg_id = 0

    def add(kind, body):
        nonlocal msg_id
        msg_id += 1
        reqs.append(wire.dumps({"id": msg_id, "kind": kind, "body": body}))

    add("handshake", {"protocol_version": 1})
    seeds = [derive_seed(run_seed, 0, i) for i in range(3)]
    for s in seeds:
        add("generate", {"prompt": PROMPT, "seed": str(s)})

    # replies are needed to chain mutate/evaluate requests, so replay the
    # requests so far against a scratch worker to harvest genotypes/ids
    scratch = TestbedWorker(default_spec())
    harvested = _replay(scratch, reqs)
    genotypes = [wire.loads(r)["body"]["genotype"] for r in harvested[1:]]
    phenotypes = [wire.loads(r)["body"]["phenotype"]["id"] for r in harvested[1:]]

    add("mutate", {
        "prompt": PROMPT, "genotype": genotypes[0],
        "seed": str(derive_seed(run_seed, 1, 0)), "strength": 0.6,
    })
    add("mutate", {
        "prompt": PROMPT, "genotype": genotypes[1],
        "seed": str(derive_seed(run_seed, 1, 1)), "strength": 0.0,
    })
    scratch2 = TestbedWorker(default_spec())
    harvested = _replay(scratch2, reqs)
    phenotypes = [
        wire.loads(r)["body"]["phenotype"]["id"]
        for r in harvested
        if "phenotype" in wire.loads(r)["body"]
    ]
    for pid in phenotypes:
        add("evaluate", {"phenotype": pid, "labels": LABELS})
        add("similarity", {"phenotype": pid, "prompt": PROMPT})
    add("shutdown", {})
    return reqs


def _replay(tb: TestbedWorker, requests: list[str]) -> list[str]:
    out = io.StringIO()
    serve(tb, iter(requests), out)
    return out.getvalue().splitlines()


def main() -> None:
    requests = build_requests()
    replies = _replay(TestbedWorker(default_spec()), requests)
    assert len(requests) == len(replies), (len(requests), len(replies))
    path = os.path.join(os.path.dirname(__file__), "..", "protocol",
                        "conformance_transcript.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        for req, rep in zip(requests, replies):
            fh.write(req + "\n")
            fh.write(rep + "\n")
    print(f"wrote {len(requests)} request/reply pairs to {os.path.normpath(path)}")


if __name__ == "__main__":
    main()
