"""Per-instance runtime state: task requests, data context, scopes, effects."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from ..compiler.program import MonitorProgram
from ..ledger import Receipt
from .runtime import DeEvent, NetworkRuntime

PENDING = "Pending"
DELIVERED = "Delivered"
DONE = "Done"

RUNNING = "Running"
COMPLETED = "Completed"
ABORTED = "Aborted"
FAULTED = "Faulted"


@dataclass
class TaskRequest:
    instance_id: str
    task_id: str
    task_name: str
    purpose: str
    inputs: tuple[tuple[str, str], ...]    # (data object name, cid)
    callback_token: str
    lane: str
    state: str = PENDING

    def is_open(self) -> bool:
        return self.state in (PENDING, DELIVERED)

    def to_dict(self, include_token: bool = True) -> dict:
        data = {
            "inputs": [{"cid": cid, "name": name} for name, cid in self.inputs],
            "instanceId": self.instance_id,
            "lane": self.lane,
            "purpose": self.purpose,
            "state": self.state,
            "taskId": self.task_id,
            "taskName": self.task_name,
        }
        if include_token:
            data["callbackToken"] = self.callback_token
        return data


@dataclass
class DataEntry:
    cid: str
    metadata: dict
    version: int
    attestation_tx: str

    def to_dict(self) -> dict:
        return {"attestationTx": self.attestation_tx, "cid": self.cid,
                "metadata": self.metadata, "version": self.version}


@dataclass
class Effects:
    """Everything one engine operation did, in order."""

    records: list[tuple[str, dict]] = field(default_factory=list)
    receipts: list[Receipt] = field(default_factory=list)
    new_task_requests: list[TaskRequest] = field(default_factory=list)
    emitted_events: list[DeEvent] = field(default_factory=list)
    status_change: str | None = None

    def record_kinds(self) -> list[str]:
        return [method for method, _ in self.records]


class WorkflowInstance:
    def __init__(self, instance_id: str, program: MonitorProgram,
                 actor_bindings: dict[str, str]):
        self.instance_id = instance_id
        self.program = program
        self.actor_bindings = dict(actor_bindings)
        self.runtime = NetworkRuntime(program.network)
        self.data_context: dict[str, DataEntry] = {}
        self.scope_states: dict[str, str] = {}
        self.requests: dict[str, TaskRequest] = {}
        self.status = RUNNING
        self.lock = threading.RLock()

    def guard_ctx(self) -> dict[str, tuple[str, dict]]:
        return {name: (e.cid, e.metadata) for name, e in self.data_context.items()}

    def open_requests(self) -> list[TaskRequest]:
        if self.status != RUNNING:
            return []
        return sorted((r for r in self.requests.values() if r.is_open()),
                      key=lambda r: r.task_id)

    def snapshot(self) -> dict:
        """Deterministic, token-free view used by the API and recovery checks."""
        return {
            "actorBindings": dict(sorted(self.actor_bindings.items())),
            "dataContext": {
                name: entry.to_dict()
                for name, entry in sorted(self.data_context.items())
            },
            "instanceId": self.instance_id,
            "machineStates": dict(sorted(self.runtime.machine_states().items())),
            "pendingTasks": [r.task_id for r in self.open_requests()],
            "programId": self.program.program_id,
            "queue": [{"name": e.name, "seq": e.seq} for e in self.runtime.queue.snapshot()],
            "scopeStates": dict(sorted(self.scope_states.items())),
            "status": self.status,
        }
