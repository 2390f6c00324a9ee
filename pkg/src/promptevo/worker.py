"""Builtin testbed exposed as an external worker process.

Run as ``python -m promptevo.worker`` to serve protocol v1 over standard
streams.  Used for loopback testing of the bridge and for recording the
conformance transcript that independent worker implementations replay.
"""

from __future__ import annotations

import argparse
import base64
import sys

import yaml

from . import wire
from .bridge import PROTOCOL_VERSION, REQUIRED_KINDS
from .core import Genotype, PhenotypeRef
from .testbed import TestbedSpec, TestbedWorker

__all__ = ["serve", "main"]


def _reply(out, msg_id: int, body: dict) -> None:
    out.write(wire.dumps({"id": msg_id, "kind": "reply", "body": body}) + "\n")
    out.flush()


def _error(out, msg_id: int, message: str) -> None:
    out.write(wire.dumps({"id": msg_id, "kind": "error", "body": {"message": message}}) + "\n")
    out.flush()


def handle(tb: TestbedWorker, kind: str, body: dict, max_concurrency: int) -> dict:
    if kind == "handshake":
        if int(body.get("protocol_version", -1)) != PROTOCOL_VERSION:
            raise ValueError(
                f"unsupported protocol version {body.get('protocol_version')!r}"
            )
        return {
            "protocol_version": PROTOCOL_VERSION,
            "max_concurrency": max_concurrency,
            "supports": list(REQUIRED_KINDS),
        }
    if kind == "generate":
        genotype, phenotype = tb.generate(body["prompt"], int(body["seed"]))
        return {
            "genotype": base64.b64encode(genotype.payload).decode("ascii"),
            "phenotype": {"id": phenotype.id},
        }
    if kind == "mutate":
        parent = Genotype(payload=base64.b64decode(body["genotype"]), seed=0)
        genotype, phenotype = tb.mutate(
            body["prompt"], parent, int(body["seed"]), float(body["strength"])
        )
        return {
            "genotype": base64.b64encode(genotype.payload).decode("ascii"),
            "phenotype": {"id": phenotype.id},
        }
    if kind == "evaluate":
        values = tb.evaluate(PhenotypeRef(id=body["phenotype"]), body["labels"])
        return {"values": list(values)}
    if kind == "similarity":
        cosine = tb.embed_similarity(PhenotypeRef(id=body["phenotype"]), body["prompt"])
        return {"cosine": cosine}
    raise ValueError(f"unknown request kind {kind!r}")


def serve(tb: TestbedWorker, inp, out, max_concurrency: int = 8) -> int:
    for raw in inp:
        line = raw.strip()
        if not line:
            continue
        try:
            msg = wire.loads(line)
            msg_id = int(msg["id"])
        except (ValueError, KeyError, TypeError):
            print(f"worker: unparseable request line: {line[:200]!r}", file=sys.stderr)
            return 1
        kind = msg.get("kind")
        if kind == "shutdown":
            _reply(out, msg_id, {})
            return 0
        try:
            _reply(out, msg_id, handle(tb, kind, msg.get("body", {}), max_concurrency))
        except Exception as exc:
            _error(out, msg_id, str(exc))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="promptevo-worker", description="serve the builtin testbed over protocol v1"
    )
    parser.add_argument("--spec", help="testbed spec file (YAML or JSON)")
    parser.add_argument("--spec-json", help="testbed spec as an inline JSON/YAML string")
    parser.add_argument("--max-concurrency", type=int, default=8)
    args = parser.parse_args(argv)

    raw = None
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    elif args.spec_json:
        raw = yaml.safe_load(args.spec_json)
    tb = TestbedWorker(TestbedSpec.from_dict(raw))
    return serve(tb, sys.stdin, sys.stdout, max_concurrency=args.max_concurrency)


if __name__ == "__main__":
    sys.exit(main())
