"""Off-chain bridge: pushes task requests to registered HTTP responders and
routes signed results back into the engine.

Delivery is at-least-once with exponential backoff; completion is
exactly-once because the callback token dies with the first accepted
completion. A responder may answer 200 with an empty body and call the
completion endpoint later, or answer 200 with inline outputs for
synchronous completion. Tasks whose deliveries exhaust their retries stay
pending for human completion.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import time
from dataclasses import dataclass, field
from fnmatch import fnmatch
from urllib.parse import urlparse

import httpx

from .canonical import canonical_bytes
from .engine import Effects, Monitor, OutputSubmission, TaskRequest
from .errors import BadToken, BadUrl, DuplicatePattern

SIGNATURE_HEADER = "X-Bridge-Signature"


@dataclass(frozen=True)
class WebhookRegistration:
    id: str
    pattern: str              # task-name glob
    url: str
    shared_secret: str
    max_retries: int = 5
    backoff_base_ms: int = 200

    def to_dict(self) -> dict:
        return {"backoffBaseMs": self.backoff_base_ms, "id": self.id,
                "maxRetries": self.max_retries, "pattern": self.pattern,
                "sharedSecret": self.shared_secret, "url": self.url}


@dataclass
class Delivery:
    instance_id: str
    task_id: str
    registration_id: str
    attempts: int = 0
    last_status: str = "pending"       # pending|delivered|failed|exhausted
    responses: list[int] = field(default_factory=list)


def sign_body(secret: str, body: bytes) -> str:
    return hmac.new(secret.encode("utf-8"), body, hashlib.sha256).hexdigest()


class Bridge:
    def __init__(self, monitor: Monitor, base_url: str = "http://localhost:8080",
                 transport: httpx.BaseTransport | None = None,
                 sleeper=time.sleep, timeout: float = 10.0):
        self.monitor = monitor
        self.base_url = base_url.rstrip("/")
        self.transport = transport
        self.sleeper = sleeper
        self.timeout = timeout
        self.registrations: dict[str, WebhookRegistration] = {}
        self.deliveries: list[Delivery] = []
        self._reg_seq = 0

    # -- registration ---------------------------------------------------------

    def register_webhook(self, pattern: str, url: str, shared_secret: str,
                         max_retries: int = 5, backoff_base_ms: int = 200) -> str:
        if any(r.pattern == pattern for r in self.registrations.values()):
            raise DuplicatePattern(pattern)
        parsed = urlparse(url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise BadUrl(url)
        self._reg_seq += 1
        reg_id = f"wh-{self._reg_seq:04d}"
        self.registrations[reg_id] = WebhookRegistration(
            id=reg_id, pattern=pattern, url=url, shared_secret=shared_secret,
            max_retries=max_retries, backoff_base_ms=backoff_base_ms)
        return reg_id

    def restore_registration(self, reg: WebhookRegistration) -> None:
        self.registrations[reg.id] = reg
        seq = int(reg.id.rsplit("-", 1)[1])
        self._reg_seq = max(self._reg_seq, seq)

    def match(self, task_name: str) -> WebhookRegistration | None:
        for reg in sorted(self.registrations.values(), key=lambda r: r.id):
            if fnmatch(task_name, reg.pattern):
                return reg
        return None

    # -- delivery ----------------------------------------------------------------

    def delivery_body(self, request: TaskRequest) -> bytes:
        return canonical_bytes({
            "callbackToken": request.callback_token,
            "callbackUrl": (f"{self.base_url}/instances/{request.instance_id}"
                            f"/tasks/{request.task_id}/complete"),
            "inputs": [{"cid": cid, "name": name} for name, cid in request.inputs],
            "instanceId": request.instance_id,
            "purpose": request.purpose,
            "taskId": request.task_id,
            "taskName": request.task_name,
        })

    def deliver(self, request: TaskRequest) -> Delivery:
        reg = self.match(request.task_name)
        if reg is None:
            raise LookupError(f"no webhook registered for task {request.task_name!r}")
        delivery = Delivery(instance_id=request.instance_id,
                            task_id=request.task_id, registration_id=reg.id)
        self.deliveries.append(delivery)
        body = self.delivery_body(request)
        headers = {"Content-Type": "application/json",
                   SIGNATURE_HEADER: sign_body(reg.shared_secret, body)}

        with httpx.Client(transport=self.transport, timeout=self.timeout) as client:
            for attempt in range(reg.max_retries + 1):
                if attempt:
                    self.sleeper(reg.backoff_base_ms * (2 ** (attempt - 1)) / 1000.0)
                delivery.attempts = attempt + 1
                try:
                    response = client.post(reg.url, content=body, headers=headers)
                except httpx.HTTPError:
                    delivery.last_status = "failed"
                    continue
                delivery.responses.append(response.status_code)
                if 200 <= response.status_code < 300:
                    delivery.last_status = "delivered"
                    self.monitor.mark_delivered(request.instance_id, request.task_id)
                    self._maybe_complete_inline(request, response)
                    return delivery
                delivery.last_status = "failed"
        delivery.last_status = "exhausted"
        return delivery

    def _maybe_complete_inline(self, request: TaskRequest,
                               response: httpx.Response) -> None:
        if not response.content:
            return
        try:
            data = response.json()
        except ValueError:
            return
        outputs = data.get("outputs")
        if outputs is None:
            return
        self.handle_callback(request.callback_token, outputs)

    def dispatch(self, requests: list[TaskRequest]) -> list[Delivery]:
        """Deliver every request that has a matching registration."""
        return [self.deliver(r) for r in requests if self.match(r.task_name)]

    # -- callbacks ------------------------------------------------------------------

    def handle_callback(self, callback_token: str, outputs: list[dict]) -> Effects:
        located = self.monitor.token_lookup(callback_token)
        if located is None:
            raise BadToken("unknown or already-consumed callback token")
        instance_id, task_id = located
        instance = self.monitor.get_instance(instance_id)
        request = instance.requests[task_id]
        submissions = []
        for out in sorted(outputs, key=lambda o: o.get("name", "")):
            content = output_bytes(out)
            cid = self.monitor.store.put(content)
            submissions.append(OutputSubmission(
                name=out["name"], cid=cid,
                metadata=out.get("metadata", {}),
                signature=out.get("signature", ""),
            ))
        signer = instance.actor_bindings[request.lane]
        return self.monitor.complete_task(instance_id, task_id, callback_token,
                                          submissions, signer)


def output_bytes(out: dict) -> bytes:
    if "contentB64" in out:
        return base64.b64decode(out["contentB64"])
    if "content" in out:
        return out["content"].encode("utf-8")
    raise KeyError("output needs 'content' or 'contentB64'")
