import io
import json
import math
import os
import queue
import sys
import threading
import time

import pytest

from promptevo import wire
from promptevo.bridge import (
    BridgeClient,
    BridgeEvaluator,
    BridgeGenerator,
    ProtocolError,
    SubprocessTransport,
    WorkerError,
)
from promptevo.core import Genotype, PhenotypeRef
from promptevo.testbed import TestbedWorker, default_spec
from promptevo.worker import serve

TRANSCRIPT = os.path.join(os.path.dirname(__file__), "..", "protocol",
                          "conformance_transcript.jsonl")


class TestWireFormat:
    def test_integers_stay_plain(self):
        assert wire.dumps({"a": 1, "b": -7}) == '{"a":1,"b":-7}'

    def test_float_shortest_form(self):
        assert wire.js_number(0.6) == "0.6"
        assert wire.js_number(0.1 + 0.2) == "0.30000000000000004"

    def test_integral_floats_drop_the_point(self):
        # ECMAScript Number::toString prints 1 for 1.0
        assert wire.js_number(1.0) == "1"
        assert wire.js_number(-3.0) == "-3"

    def test_exponent_forms(self):
        assert wire.js_number(1e21) == "1e+21"
        assert wire.js_number(1e-7) == "1e-7"
        assert wire.js_number(1.5e-7) == "1.5e-7"

    def test_no_whitespace_and_insertion_order(self):
        msg = {"id": 3, "kind": "reply", "body": {"z": 1, "a": 2}}
        assert wire.dumps(msg) == '{"id":3,"kind":"reply","body":{"z":1,"a":2}}'

    def test_loads_roundtrip(self):
        msg = {"id": 1, "kind": "reply", "body": {"values": [0.25, 1.0]}}
        assert wire.loads(wire.dumps(msg)) == msg

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            wire.dumps({"x": math.inf})


class ScriptedTransport:
    """Feeds canned reply lines to the client; records what was sent.

    Each scripted reply is released only after one more request line has
    gone out, so the background reader cannot consume a reply before the
    client has registered the request.  Further replies go through the
    ``replies`` queue."""

    def __init__(self, scripted):
        self._scripted = list(scripted)
        self._delivered = 0
        self.replies = queue.Queue()
        self.sent = []
        self.closed = False
        self._cv = threading.Condition()

    def send_line(self, line):
        with self._cv:
            self.sent.append(line)
            self._cv.notify_all()

    def recv_line(self):
        with self._cv:
            if self._delivered < len(self._scripted):
                while len(self.sent) <= self._delivered and not self.closed:
                    self._cv.wait()
                if self.closed:
                    return None
                reply = self._scripted[self._delivered]
                self._delivered += 1
                return reply
        return self.replies.get()

    def close(self):
        with self._cv:
            self.closed = True
            self._cv.notify_all()
        self.replies.put(None)


def _reply(msg_id, body):
    return wire.dumps({"id": msg_id, "kind": "reply", "body": body})


def make_client(replies):
    transport = ScriptedTransport(replies)
    return BridgeClient(transport, call_timeout=2.0), transport


HANDSHAKE_BODY = {
    "protocol_version": 1,
    "max_concurrency": 4,
    "supports": ["generate", "mutate", "evaluate", "similarity"],
}


class TestBridgeClient:
    def test_handshake_success(self):
        client, transport = make_client([_reply(1, HANDSHAKE_BODY)])
        info = client.handshake()
        assert info.max_concurrency == 4
        assert json.loads(transport.sent[0])["kind"] == "handshake"
        transport.close()

    def test_handshake_version_mismatch(self):
        client, transport = make_client([_reply(1, {**HANDSHAKE_BODY, "protocol_version": 99})])
        with pytest.raises(ProtocolError, match="version 99"):
            client.handshake()
        transport.close()

    def test_handshake_missing_kind(self):
        body = {**HANDSHAKE_BODY, "supports": ["generate", "evaluate"]}
        client, transport = make_client([_reply(1, body)])
        with pytest.raises(ProtocolError, match="does not support"):
            client.handshake()
        transport.close()

    def test_out_of_order_replies_are_matched(self):
        client, transport = make_client([])
        results = {}

        def call(expect_id):
            results[expect_id] = client.call("evaluate", {"n": expect_id})

        t1 = threading.Thread(target=call, args=(1,))
        t1.start()
        while not transport.sent:
            time.sleep(0.001)
        t2 = threading.Thread(target=call, args=(2,))
        t2.start()
        while len(transport.sent) < 2:
            time.sleep(0.001)
        # answer the second request first
        transport.replies.put(_reply(2, {"values": [2]}))
        transport.replies.put(_reply(1, {"values": [1]}))
        t1.join(timeout=5)
        t2.join(timeout=5)
        assert results[1] == {"values": [1]}
        assert results[2] == {"values": [2]}
        transport.close()

    def test_unknown_request_id_aborts(self):
        client, transport = make_client([_reply(777, {})])
        with pytest.raises(ProtocolError, match="unknown request id"):
            client.call("evaluate", {})
        transport.close()

    def test_malformed_line_aborts(self):
        client, transport = make_client(["this is not json"])
        with pytest.raises(ProtocolError, match="malformed"):
            client.call("evaluate", {})
        transport.close()

    def test_error_reply_raises_worker_error(self):
        client, transport = make_client([
            wire.dumps({"id": 1, "kind": "error", "body": {"message": "boom"}})
        ])
        with pytest.raises(WorkerError, match="boom"):
            client.call("evaluate", {})
        transport.close()

    def test_pure_kind_retries_then_succeeds(self):
        # swallow the first request; answer only its retry
        transport = ScriptedTransport([])
        original_send = transport.send_line

        def send(line):
            original_send(line)
            if json.loads(line)["id"] == 2:
                transport.replies.put(_reply(2, {"values": [0.5]}))

        transport.send_line = send
        client = BridgeClient(transport, call_timeout=2.0)
        body = client.call("evaluate", {}, timeout=0.2)
        assert body == {"values": [0.5]}
        assert len(transport.sent) == 2
        transport.close()

    def test_exhausted_retries_raise(self):
        client, transport = make_client([])
        with pytest.raises(WorkerError, match="timed out"):
            client.call("evaluate", {}, timeout=0.05)
        assert len(transport.sent) == 3  # initial + 2 retries
        transport.close()

    def test_impure_kind_not_retried(self):
        client, transport = make_client([])
        with pytest.raises(WorkerError, match="timed out"):
            client.call("handshake", {"protocol_version": 1}, timeout=0.05)
        assert len(transport.sent) == 1
        transport.close()


class TestBridgeAdapters:
    def test_evaluate_range_check_names_label_index(self):
        client, transport = make_client([_reply(1, {"values": [0.5, 1.7]})])
        with pytest.raises(ProtocolError, match="label index 1"):
            BridgeEvaluator(client).evaluate(PhenotypeRef(id="p"), ["a", "b"])
        transport.close()

    def test_evaluate_count_check(self):
        client, transport = make_client([_reply(1, {"values": [0.5]})])
        with pytest.raises(ProtocolError, match="2 values"):
            BridgeEvaluator(client).evaluate(PhenotypeRef(id="p"), ["a", "b"])
        transport.close()

    def test_similarity_range_check(self):
        client, transport = make_client([_reply(1, {"cosine": -1.2})])
        with pytest.raises(ProtocolError, match="outside"):
            BridgeEvaluator(client).embed_similarity(PhenotypeRef(id="p"), "p")
        transport.close()

    def test_generate_decodes_payload_and_seed(self):
        import base64
        payload = b"\x01\x02\x03\x04\x05\x06\x07\x08"
        body = {"genotype": base64.b64encode(payload).decode(),
                "phenotype": {"id": "tb-x"}}
        client, transport = make_client([_reply(1, body)])
        genotype, phenotype = BridgeGenerator(client).generate("p", 42)
        assert genotype == Genotype(payload=payload, seed=42)
        assert phenotype.id == "tb-x"
        transport.close()

    def test_seeds_travel_as_decimal_strings(self):
        client, transport = make_client([])
        transport.replies.put(_reply(1, {"genotype": "AAAAAAAAAAA=",
                                         "phenotype": {"id": "x"}}))
        big = (1 << 63) + 12345
        BridgeGenerator(client).generate("p", big)
        sent = json.loads(transport.sent[0])
        assert sent["body"]["seed"] == str(big)
        transport.close()


class TestServeTranscript:
    def test_byte_exact_replay(self):
        with open(TRANSCRIPT, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
        requests = lines[0::2]
        expected = lines[1::2]
        inp = io.StringIO("\n".join(requests) + "\n")
        out = io.StringIO()
        rc = serve(TestbedWorker(default_spec()), inp, out)
        assert rc == 0
        assert out.getvalue().splitlines() == expected

    def test_unknown_kind_yields_error_reply(self):
        inp = io.StringIO(wire.dumps({"id": 5, "kind": "resize", "body": {}}) + "\n")
        out = io.StringIO()
        serve(TestbedWorker(default_spec()), inp, out)
        msg = wire.loads(out.getvalue())
        assert msg["kind"] == "error" and msg["id"] == 5

    def test_unparseable_line_exits_nonzero(self):
        inp = io.StringIO("not json\n")
        out = io.StringIO()
        assert serve(TestbedWorker(default_spec()), inp, out) == 1


class TestLoopback:
    def _command(self):
        return [sys.executable, "-m", "promptevo.worker",
                "--spec-json", '{"q": 2, "dim": 2}']

    def test_subprocess_worker_matches_in_process(self):
        transport = SubprocessTransport(self._command())
        client = BridgeClient(transport)
        client.handshake()
        gen = BridgeGenerator(client)
        ev = BridgeEvaluator(client)
        tb = TestbedWorker(default_spec())
        try:
            for seed in (3, 9, 12345678901234567890):
                g_remote, p_remote = gen.generate("p", seed)
                g_local, p_local = tb.generate("p", seed)
                assert g_remote.payload == g_local.payload
                assert p_remote.id == p_local.id
                assert ev.evaluate(p_remote, ["a", "b"]) == tb.evaluate(p_local, ["a", "b"])
                assert ev.embed_similarity(p_remote, "p") == tb.embed_similarity(p_local, "p")
                m_remote, mp_remote = gen.mutate("p", g_remote, seed + 1, 0.6)
                m_local, mp_local = tb.mutate("p", g_local, seed + 1, 0.6)
                assert m_remote.payload == m_local.payload
                assert mp_remote.id == mp_local.id
        finally:
            client.shutdown()
