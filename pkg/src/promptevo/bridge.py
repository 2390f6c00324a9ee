"""Client side of the worker protocol.

An external worker process implements the generator and evaluator
contracts over line-delimited JSON messages (protocol v1, PROTOCOL.md).
The default transport is the worker's standard streams; a TCP variant
connects to an already-listening worker.  One background reader thread
dispatches replies to waiting callers by request id, tolerating
out-of-order replies; pure request kinds are retried on timeout.
"""

from __future__ import annotations

import base64
import itertools
import queue
import socket
import subprocess
import sys
import threading
from dataclasses import dataclass
from typing import Optional, Sequence

from . import wire
from .core import Genotype, PhenotypeRef, RunConfig

__all__ = [
    "WorkerError",
    "ProtocolError",
    "WorkerInfo",
    "SubprocessTransport",
    "TcpTransport",
    "BridgeClient",
    "BridgeGenerator",
    "BridgeEvaluator",
    "connect_worker",
]

PROTOCOL_VERSION = 1
REQUIRED_KINDS = ("generate", "mutate", "evaluate", "similarity")
HANDSHAKE_TIMEOUT = 10.0
CALL_TIMEOUT = 120.0
RETRIES = 2  # extra attempts for pure request kinds


class WorkerError(RuntimeError):
    """Worker unreachable, crashed, or reported an error."""


class ProtocolError(WorkerError):
    """Worker violated the wire protocol or a value contract."""


@dataclass(frozen=True)
class WorkerInfo:
    protocol_version: int
    max_concurrency: int
    supports: tuple[str, ...]


class SubprocessTransport:
    """Spawn a worker command and exchange lines over its stdio."""

    def __init__(self, command: Sequence[str]):
        try:
            self._proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=sys.stderr,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise WorkerError(f"cannot start worker {command!r}: {exc}") from exc

    def send_line(self, line: str) -> None:
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise WorkerError("worker stdin closed") from exc

    def recv_line(self) -> Optional[str]:
        line = self._proc.stdout.readline()
        if line == "":
            return None
        return line.rstrip("\n")

    def close(self) -> None:
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()


class TcpTransport:
    def __init__(self, address: str):
        host, _, port = address.rpartition(":")
        try:
            self._sock = socket.create_connection((host, int(port)), timeout=HANDSHAKE_TIMEOUT)
        except OSError as exc:
            raise WorkerError(f"cannot connect to worker at {address}: {exc}") from exc
        self._sock.settimeout(None)
        self._rfile = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._wlock = threading.Lock()

    def send_line(self, line: str) -> None:
        with self._wlock:
            try:
                self._sock.sendall((line + "\n").encode("utf-8"))
            except OSError as exc:
                raise WorkerError("worker connection closed") from exc

    def recv_line(self) -> Optional[str]:
        line = self._rfile.readline()
        if line == "":
            return None
        return line.rstrip("\n")

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class BridgeClient:
    def __init__(self, transport, call_timeout: float = CALL_TIMEOUT):
        self._transport = transport
        self._timeout = call_timeout
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._pending: dict[int, queue.Queue] = {}
        self._fatal: Optional[Exception] = None
        self._closed = False
        self._slots: Optional[threading.Semaphore] = None
        self.info: Optional[WorkerInfo] = None
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    # -- reader ---------------------------------------------------------

    def _read_loop(self) -> None:
        while True:
            try:
                line = self._transport.recv_line()
            except Exception as exc:  # transport torn down
                self._abort(WorkerError(str(exc)))
                return
            if line is None:
                if not self._closed:
                    self._abort(WorkerError("worker closed its output stream"))
                return
            if not line.strip():
                continue
            try:
                msg = wire.loads(line)
                msg_id = int(msg["id"])
                kind = msg["kind"]
                body = msg.get("body", {})
            except (ValueError, KeyError, TypeError):
                self._abort(ProtocolError(f"malformed reply line: {line[:200]!r}"))
                return
            with self._lock:
                waiter = self._pending.pop(msg_id, None)
            if waiter is None:
                self._abort(ProtocolError(f"reply with unknown request id {msg_id}"))
                return
            waiter.put((kind, body))

    def _abort(self, exc: Exception) -> None:
        with self._lock:
            self._fatal = exc
            pending = list(self._pending.values())
            self._pending.clear()
        for w in pending:
            w.put(("__aborted__", exc))

    # -- calls ----------------------------------------------------------

    def _call_once(self, kind: str, body: dict, timeout: float):
        if self._fatal is not None:
            raise self._fatal
        waiter: queue.Queue = queue.Queue(maxsize=1)
        with self._lock:
            msg_id = next(self._ids)
            self._pending[msg_id] = waiter
        self._transport.send_line(wire.dumps({"id": msg_id, "kind": kind, "body": body}))
        try:
            reply_kind, reply_body = waiter.get(timeout=timeout)
        except queue.Empty:
            with self._lock:
                self._pending.pop(msg_id, None)
            raise TimeoutError(
                f"worker timed out after {timeout}s during {kind} (request {msg_id})"
            )
        if reply_kind == "__aborted__":
            raise reply_body
        if reply_kind == "error":
            raise WorkerError(str(reply_body.get("message", "worker error")))
        if reply_kind != "reply":
            raise ProtocolError(f"unexpected message kind {reply_kind!r}")
        return reply_body

    def call(self, kind: str, body: dict, timeout: Optional[float] = None) -> dict:
        timeout = self._timeout if timeout is None else timeout
        retries = RETRIES if kind in REQUIRED_KINDS else 0
        if self._slots is not None:
            self._slots.acquire()
        try:
            for attempt in range(retries + 1):
                try:
                    return self._call_once(kind, body, timeout)
                except TimeoutError as exc:
                    if attempt == retries:
                        raise WorkerError(str(exc)) from exc
        finally:
            if self._slots is not None:
                self._slots.release()

    def handshake(self) -> WorkerInfo:
        body = self.call(
            "handshake",
            {"protocol_version": PROTOCOL_VERSION},
            timeout=HANDSHAKE_TIMEOUT,
        )
        try:
            info = WorkerInfo(
                protocol_version=int(body["protocol_version"]),
                max_concurrency=int(body["max_concurrency"]),
                supports=tuple(body["supports"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed handshake reply: {body!r}") from exc
        if info.protocol_version != PROTOCOL_VERSION:
            raise ProtocolError(
                f"unsupported protocol version {info.protocol_version}"
            )
        if info.max_concurrency < 1:
            raise ProtocolError("worker max_concurrency must be >= 1")
        missing = [k for k in REQUIRED_KINDS if k not in info.supports]
        if missing:
            raise ProtocolError(f"worker does not support: {missing}")
        self.info = info
        self._slots = threading.Semaphore(info.max_concurrency)
        return info

    def shutdown(self) -> None:
        self._closed = True
        try:
            self.call("shutdown", {}, timeout=5.0)
        except WorkerError:
            pass
        self._transport.close()


def _decode_phenotype(raw) -> PhenotypeRef:
    dims = raw.get("dims")
    return PhenotypeRef(id=raw["id"], dims=tuple(dims) if dims else None)


class BridgeGenerator:
    def __init__(self, client: BridgeClient):
        self._client = client

    def generate(self, prompt: str, seed: int) -> tuple[Genotype, PhenotypeRef]:
        body = self._client.call("generate", {"prompt": prompt, "seed": str(seed)})
        try:
            genotype = Genotype(payload=base64.b64decode(body["genotype"]), seed=seed)
            phenotype = _decode_phenotype(body["phenotype"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed generate reply: {body!r}") from exc
        return genotype, phenotype

    def mutate(
        self, prompt: str, parent: Genotype, seed: int, strength: float
    ) -> tuple[Genotype, PhenotypeRef]:
        body = self._client.call(
            "mutate",
            {
                "prompt": prompt,
                "genotype": base64.b64encode(parent.payload).decode("ascii"),
                "seed": str(seed),
                "strength": float(strength),
            },
        )
        try:
            genotype = Genotype(payload=base64.b64decode(body["genotype"]), seed=seed)
            phenotype = _decode_phenotype(body["phenotype"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed mutate reply: {body!r}") from exc
        return genotype, phenotype


class BridgeEvaluator:
    def __init__(self, client: BridgeClient):
        self._client = client

    def evaluate(self, phenotype: PhenotypeRef, labels: Sequence[str]) -> tuple[float, ...]:
        body = self._client.call(
            "evaluate", {"phenotype": phenotype.id, "labels": list(labels)}
        )
        values = body.get("values")
        if not isinstance(values, list) or len(values) != len(labels):
            raise ProtocolError(
                f"evaluate reply must carry {len(labels)} values, got {values!r}"
            )
        for i, v in enumerate(values):
            if not isinstance(v, (int, float)) or not (0.0 <= v <= 1.0):
                raise ProtocolError(
                    f"objective value {v!r} for label index {i} outside [0, 1]"
                )
        return tuple(float(v) for v in values)

    def embed_similarity(self, phenotype: PhenotypeRef, prompt: str) -> float:
        body = self._client.call(
            "similarity", {"phenotype": phenotype.id, "prompt": prompt}
        )
        cosine = body.get("cosine")
        if not isinstance(cosine, (int, float)) or not (-1.0 <= cosine <= 1.0):
            raise ProtocolError(f"similarity reply cosine {cosine!r} outside [-1, 1]")
        return float(cosine)


def connect_worker(config: RunConfig):
    """Build (generator, evaluator, close) for the configured worker."""
    from .testbed import TestbedSpec, TestbedWorker  # local import: avoid cycle

    if config.worker.kind == "builtin":
        tb = TestbedWorker(TestbedSpec.from_dict(config.testbed))
        return tb, tb, lambda: None
    if config.worker.kind == "command":
        transport = SubprocessTransport(config.worker.command)
    elif config.worker.kind == "tcp":
        transport = TcpTransport(config.worker.address)
    else:
        raise WorkerError(f"unknown worker kind {config.worker.kind!r}")
    client = BridgeClient(transport)
    client.handshake()
    return BridgeGenerator(client), BridgeEvaluator(client), client.shutdown
