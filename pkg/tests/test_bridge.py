from __future__ import annotations

import hashlib
import hmac
import json

import httpx
import pytest

from flowledger.bridge import SIGNATURE_HEADER, Bridge
from flowledger.docstore import sign_attestation
from flowledger.errors import BadSignature, BadToken, BadUrl, DuplicatePattern


class Responder:
    """Scriptable webhook endpoint: a list of status codes, then success."""

    def __init__(self, statuses=(200,), body_fn=None):
        self.statuses = list(statuses)
        self.body_fn = body_fn
        self.requests: list[httpx.Request] = []

    def transport(self) -> httpx.MockTransport:
        def handle(request: httpx.Request) -> httpx.Response:
            self.requests.append(request)
            status = self.statuses.pop(0) if self.statuses else 200
            if status == 200 and self.body_fn is not None:
                return httpx.Response(200, json=self.body_fn(request))
            return httpx.Response(status)

        return httpx.MockTransport(handle)


@pytest.fixture
def running(harness, harvester_program):
    iid = harness.start(harvester_program)
    return harness, iid


def _bridge(harness, responder, **kw):
    sleeps = []
    bridge = Bridge(harness.monitor, base_url="http://svc:8080",
                    transport=responder.transport(),
                    sleeper=sleeps.append, **kw)
    return bridge, sleeps


def test_register_duplicate_pattern(running):
    harness, _ = running
    bridge, _ = _bridge(harness, Responder())
    bridge.register_webhook("GetIns", "http://ins.example/hook", "s3cret")
    with pytest.raises(DuplicatePattern):
        bridge.register_webhook("GetIns", "http://other.example/hook", "x")


def test_register_bad_url(running):
    harness, _ = running
    bridge, _ = _bridge(harness, Responder())
    with pytest.raises(BadUrl):
        bridge.register_webhook("GetIns", "not a url", "x")


def test_delivery_success_first_attempt(running):
    harness, iid = running
    responder = Responder([200])
    bridge, sleeps = _bridge(harness, responder)
    bridge.register_webhook("RecAgr", "http://seller.example/hook", "s3cret")
    request = harness.monitor.pending_tasks(iid)[0]
    delivery = bridge.deliver(request)
    assert delivery.last_status == "delivered"
    assert delivery.attempts == 1
    assert sleeps == []
    assert harness.monitor.pending_tasks(iid)[0].state == "Delivered"

    sent = responder.requests[0]
    body = json.loads(sent.content)
    assert body["taskName"] == "RecAgr"
    assert body["callbackUrl"] == f"http://svc:8080/instances/{iid}/tasks/RecAgr/complete"
    assert body["callbackToken"] == request.callback_token
    expected_mac = hmac.new(b"s3cret", sent.content, hashlib.sha256).hexdigest()
    assert sent.headers[SIGNATURE_HEADER] == expected_mac


def test_retry_until_success(running):
    harness, iid = running
    responder = Responder([500, 500, 500, 500, 500, 200])
    bridge, sleeps = _bridge(harness, responder)
    bridge.register_webhook("RecAgr", "http://seller.example/hook", "x",
                            max_retries=5, backoff_base_ms=200)
    delivery = bridge.deliver(harness.monitor.pending_tasks(iid)[0])
    assert delivery.last_status == "delivered"
    assert delivery.attempts == 6
    assert sleeps == [0.2, 0.4, 0.8, 1.6, 3.2]     # base * 2^attempt


def test_exhausted_leaves_task_pending(running):
    harness, iid = running
    responder = Responder([500] * 10)
    bridge, _ = _bridge(harness, responder)
    bridge.register_webhook("RecAgr", "http://seller.example/hook", "x",
                            max_retries=3)
    delivery = bridge.deliver(harness.monitor.pending_tasks(iid)[0])
    assert delivery.last_status == "exhausted"
    assert delivery.attempts == 4
    # human fallback: still visible in the queue
    assert [r.task_id for r in harness.monitor.pending_tasks(iid)] == ["RecAgr"]


def test_inline_synchronous_completion(running):
    harness, iid = running
    seller = harness.signer_for("Seller")
    request = harness.monitor.pending_tasks(iid)[0]
    content = b"signed sales agreement"
    cid = harness.store.put(content)
    att = sign_attestation(seller, iid, "SalesAgr", 0, cid)

    def body(_req):
        return {"outputs": [{
            "name": "SalesAgr",
            "content": content.decode(),
            "metadata": {"accepted": True},
            "signature": att.signature,
        }]}

    responder = Responder([200], body_fn=body)
    bridge, _ = _bridge(harness, responder)
    bridge.register_webhook("RecAgr", "http://seller.example/hook", "x")
    delivery = bridge.deliver(request)
    assert delivery.last_status == "delivered"
    assert [r.task_id for r in harness.monitor.pending_tasks(iid)] == ["GetTrReq"]


def test_callback_unknown_token(running):
    harness, _ = running
    bridge, _ = _bridge(harness, Responder())
    with pytest.raises(BadToken):
        bridge.handle_callback("f" * 64, [])


def test_callback_unsigned_output(running):
    harness, iid = running
    bridge, _ = _bridge(harness, Responder())
    token = harness.monitor.pending_tasks(iid)[0].callback_token
    with pytest.raises(BadSignature):
        bridge.handle_callback(token, [{
            "name": "SalesAgr", "content": "agreement",
            "metadata": {}, "signature": "ab" * 64}])


def test_duplicate_callbacks_single_completion(running):
    harness, iid = running
    seller = harness.signer_for("Seller")
    token = harness.monitor.pending_tasks(iid)[0].callback_token
    content = "the agreement"
    cid = harness.store.put(content.encode())
    att = sign_attestation(seller, iid, "SalesAgr", 0, cid)
    outputs = [{"name": "SalesAgr", "content": content,
                "metadata": {}, "signature": att.signature}]
    bridge, _ = _bridge(harness, Responder())
    bridge.handle_callback(token, outputs)
    for _ in range(5):
        with pytest.raises(BadToken):
            bridge.handle_callback(token, outputs)
    completed = [1 for m, p in harness.ledger.get_events(iid)
                 if m == "TaskCompleted" and p["taskId"] == "RecAgr"]
    assert completed == [1]


def test_delivery_does_not_mutate_instance(running):
    harness, iid = running
    before = harness.monitor.get_instance(iid).snapshot()
    responder = Responder([500, 500, 500, 500])
    bridge, _ = _bridge(harness, responder)
    bridge.register_webhook("*", "http://anything.example/hook", "x", max_retries=3)
    bridge.deliver(harness.monitor.pending_tasks(iid)[0])
    after = harness.monitor.get_instance(iid).snapshot()
    assert before == after          # snapshots exclude delivery bookkeeping
    assert len(harness.ledger.all_txs()) > 0
