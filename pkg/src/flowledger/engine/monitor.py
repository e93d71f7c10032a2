"""The resident monitor: deploys programs, runs instances, certifies results.

Every state change lands on the ledger as a transaction signed by the
monitor's own key; actor-level authenticity lives in the payloads
(deployer/creator signatures, per-output attestation signatures, callback
tokens). Given the same programs, bindings and external call sequence the
monitor produces byte-identical ledger contents, which is what makes
crash recovery a pure re-execution of the chain.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

from ..canonical import canonical_bytes
from ..compiler.program import MonitorProgram, program_from_dict
from ..docstore import Attestation, DocStore, verify_attestation
from ..errors import (
    BadSignature,
    BadToken,
    CorruptState,
    DuplicateProgram,
    GuardFault,
    MissingActor,
    NotRunning,
    OutputMismatch,
    ScopeNotActive,
    TooLarge,
    UnknownCid,
    UnknownInstance,
    UnknownProgram,
    UnknownScope,
    WrongActor,
)
from ..keys import Signer, verify_signature
from ..ledger import Ledger, Tx
from .instance import (
    ABORTED,
    COMPLETED,
    DELIVERED,
    DONE,
    FAULTED,
    PENDING,
    RUNNING,
    DataEntry,
    Effects,
    TaskRequest,
    WorkflowInstance,
)
from .runtime import DeEvent, event_subject

MAX_METADATA_BYTES = 4096

# record kinds that replay re-executes; everything else is regenerated
_COMMAND_KINDS = ("DeployProgram", "InstanceCreated", "TaskCompleted", "ScopeAborted")


@dataclass(frozen=True)
class OutputSubmission:
    """One completed output: a stored document plus the author's signature."""

    name: str
    cid: str
    metadata: dict
    signature: str


def deploy_message(program_id: str) -> bytes:
    return canonical_bytes({"programId": program_id})


def create_message(program_id: str, actor_bindings: dict[str, str]) -> bytes:
    return canonical_bytes({"actorBindings": dict(sorted(actor_bindings.items())),
                            "programId": program_id})


def abort_message(instance_id: str, scope_id: str, reason: str) -> bytes:
    return canonical_bytes({"instanceId": instance_id, "reason": reason,
                            "scopeId": scope_id})


class Monitor:
    def __init__(self, ledger: Ledger, store: DocStore, signer: Signer):
        self.ledger = ledger
        self.store = store
        self.signer = signer
        self.programs: dict[str, MonitorProgram] = {}
        self.instances: dict[str, WorkflowInstance] = {}
        self._tokens: dict[str, tuple[str, str]] = {}
        self._instance_seq = 0

    # -- deployment ---------------------------------------------------------

    def deploy_program(self, program: MonitorProgram, deployer: Signer) -> str:
        signature = deployer.sign(deploy_message(program.program_id))
        return self.deploy_signed(program, deployer.public_hex, signature)

    def deploy_signed(self, program: MonitorProgram, deployer_pub: str,
                      signature: str) -> str:
        pid = program.program_id
        if pid in self.programs:
            raise DuplicateProgram(pid)
        if not verify_signature(deployer_pub, deploy_message(pid), signature):
            raise BadSignature("deployer signature does not verify")
        self.ledger.submit(self.signer, "DeployProgram", {
            "deployer": deployer_pub,
            "program": program.to_dict(),
            "programId": pid,
            "signature": signature,
        })
        self.programs[pid] = program
        return pid

    def get_program(self, program_id: str) -> MonitorProgram:
        if program_id not in self.programs:
            raise UnknownProgram(program_id)
        return self.programs[program_id]

    # -- instance lifecycle ----------------------------------------------------

    def create_instance(self, program_id: str, actor_bindings: dict[str, str],
                        creator: Signer) -> str:
        signature = creator.sign(create_message(program_id, actor_bindings))
        return self.create_signed(program_id, actor_bindings,
                                  creator.public_hex, signature)

    def create_signed(self, program_id: str, actor_bindings: dict[str, str],
                      creator_pub: str, signature: str,
                      instance_id: str | None = None) -> str:
        program = self.get_program(program_id)
        lanes = set(program.lane_ids())
        missing = lanes - set(actor_bindings)
        extra = set(actor_bindings) - lanes
        if missing or extra:
            raise MissingActor(
                f"bindings must cover exactly the program lanes; "
                f"missing={sorted(missing)} unknown={sorted(extra)}")
        if not verify_signature(creator_pub,
                                create_message(program_id, actor_bindings),
                                signature):
            raise BadSignature("creator signature does not verify")

        self._instance_seq += 1
        iid = instance_id or f"i-{self._instance_seq:04d}"
        instance = WorkflowInstance(iid, program, actor_bindings)
        self.instances[iid] = instance
        self.ledger.submit(self.signer, "InstanceCreated", {
            "actorBindings": dict(sorted(actor_bindings.items())),
            "creator": creator_pub,
            "instanceId": iid,
            "programId": program_id,
            "signature": signature,
        })
        for lane in sorted(lanes):
            instance.runtime.enqueue(f"start:{lane}")
        return iid

    def get_instance(self, instance_id: str) -> WorkflowInstance:
        if instance_id not in self.instances:
            raise UnknownInstance(instance_id)
        return self.instances[instance_id]

    # -- stepping ------------------------------------------------------------------

    def step(self, instance_id: str) -> Effects:
        instance = self.get_instance(instance_id)
        with instance.lock:
            if instance.status != RUNNING:
                raise NotRunning(f"instance {instance_id} is {instance.status}")
            if not len(instance.runtime.queue):
                raise NotRunning(f"instance {instance_id} has no queued events")
            effects = Effects()
            self._step_locked(instance, effects)
            return effects

    def _step_locked(self, instance: WorkflowInstance, effects: Effects) -> None:
        def on_action(action: str, event: DeEvent) -> None:
            kind, _, arg = action.partition(":")
            if kind == "emit":
                emitted = instance.runtime.enqueue(arg, origin=event.name)
                effects.emitted_events.append(emitted)
            elif kind == "request":
                self._request_task(instance, arg, effects)
            elif kind == "open":
                instance.scope_states[arg] = "active"
                self._record(instance, effects, "ScopeOpened",
                             {"instanceId": instance.instance_id, "scopeId": arg})
            elif kind == "commit":
                instance.scope_states[arg] = "committed"
                self._record(instance, effects, "ScopeCommitted",
                             {"instanceId": instance.instance_id, "scopeId": arg})
            else:
                raise AssertionError(f"unknown action {action!r}")

        try:
            instance.runtime.step(instance.guard_ctx(), on_action)
        except GuardFault as exc:
            self._fault(instance, str(exc), effects)
            return
        if (instance.status == RUNNING and not len(instance.runtime.queue)
                and instance.runtime.all_accepting()):
            instance.status = COMPLETED
            effects.status_change = COMPLETED
            self._record(instance, effects, "InstanceCompleted",
                         {"instanceId": instance.instance_id})

    def _record(self, instance: WorkflowInstance, effects: Effects,
                method: str, payload: dict) -> None:
        receipt = self.ledger.submit(self.signer, method, payload)
        effects.records.append((method, payload))
        effects.receipts.append(receipt)

    def _fault(self, instance: WorkflowInstance, reason: str, effects: Effects) -> None:
        instance.status = FAULTED
        effects.status_change = FAULTED
        self._record(instance, effects, "InstanceFaulted",
                     {"instanceId": instance.instance_id, "reason": reason})

    def _request_task(self, instance: WorkflowInstance, task_id: str,
                      effects: Effects) -> None:
        flow = instance.program.dataflow[task_id]
        assert task_id not in instance.requests, \
            f"task {task_id} requested twice in one activation"
        inputs = []
        for name in flow.inputs:
            entry = instance.data_context.get(name)
            if entry is None:
                raise GuardFault(
                    f"task {task_id!r} needs data object {name!r} "
                    "which no completed task has produced")
            inputs.append((name, entry.cid))
        token = secrets.token_hex(32)
        request = TaskRequest(
            instance_id=instance.instance_id,
            task_id=task_id,
            task_name=flow.name,
            purpose=flow.purpose,
            inputs=tuple(inputs),
            callback_token=token,
            lane=flow.lane,
        )
        instance.requests[task_id] = request
        self._tokens[token] = (instance.instance_id, task_id)
        self._record(instance, effects, "TaskRequested", {
            "inputs": [{"cid": cid, "name": name} for name, cid in inputs],
            "instanceId": instance.instance_id,
            "lane": flow.lane,
            "purpose": flow.purpose,
            "taskId": task_id,
            "taskName": flow.name,
        })
        effects.new_task_requests.append(request)

    def run_until_quiescent(self, instance_id: str) -> str:
        instance = self.get_instance(instance_id)
        with instance.lock:
            if instance.status != RUNNING:
                raise NotRunning(f"instance {instance_id} is {instance.status}")
            effects = Effects()
            self._drain(instance, effects)
            return instance.status

    def _drain(self, instance: WorkflowInstance, effects: Effects) -> None:
        limit = 10_000
        while instance.status == RUNNING and len(instance.runtime.queue):
            self._step_locked(instance, effects)
            limit -= 1
            if limit <= 0:
                raise AssertionError("event budget exhausted; program is not acyclic")

    # -- task completion ---------------------------------------------------------

    def pending_tasks(self, instance_id: str) -> list[TaskRequest]:
        return self.get_instance(instance_id).open_requests()

    def mark_delivered(self, instance_id: str, task_id: str) -> None:
        instance = self.get_instance(instance_id)
        with instance.lock:
            request = instance.requests.get(task_id)
            if request is not None and request.state == PENDING:
                request.state = DELIVERED

    def token_lookup(self, token: str) -> tuple[str, str] | None:
        return self._tokens.get(token)

    def complete_task(self, instance_id: str, task_id: str, callback_token: str,
                      outputs: list[OutputSubmission], signer_pub: str) -> Effects:
        instance = self.get_instance(instance_id)
        with instance.lock:
            if instance.status != RUNNING:
                raise NotRunning(f"instance {instance_id} is {instance.status}")
            request = instance.requests.get(task_id)
            if request is None or not request.is_open():
                raise BadToken(f"task {task_id!r} has no open request")
            if request.callback_token != callback_token:
                raise BadToken("callback token does not match")
            return self._complete_locked(instance, request, outputs, signer_pub)

    def _complete_locked(self, instance: WorkflowInstance, request: TaskRequest,
                         outputs: list[OutputSubmission], signer_pub: str) -> Effects:
        bound = instance.actor_bindings.get(request.lane)
        if signer_pub != bound:
            raise WrongActor(
                f"task {request.task_id!r} belongs to lane {request.lane!r}")
        flow = instance.program.dataflow[request.task_id]
        submitted = sorted(outputs, key=lambda o: o.name)
        names = [o.name for o in submitted]
        if names != list(flow.outputs):
            raise OutputMismatch(
                f"task {request.task_id!r} expects outputs {list(flow.outputs)}, "
                f"got {names}")
        versions: dict[str, int] = {}
        for out in submitted:
            if len(canonical_bytes(out.metadata)) > MAX_METADATA_BYTES:
                raise TooLarge(f"metadata for {out.name!r} exceeds 4 KiB")
            if not self.store.has(out.cid):
                raise UnknownCid(out.cid)
            prior = instance.data_context.get(out.name)
            version = prior.version + 1 if prior else 0
            versions[out.name] = version
            att = Attestation(
                instance_id=instance.instance_id, data_object=out.name,
                version=version, cid=out.cid, author=signer_pub,
                signature=out.signature,
            )
            if not verify_attestation(att, signer_pub):
                raise BadSignature(f"attestation signature for {out.name!r} "
                                   "does not verify")

        effects = Effects()
        for out in submitted:
            att_payload = Attestation(
                instance_id=instance.instance_id, data_object=out.name,
                version=versions[out.name], cid=out.cid, author=signer_pub,
                signature=out.signature,
            ).to_payload()
            self._record(instance, effects, "Attestation", att_payload)
            instance.data_context[out.name] = DataEntry(
                cid=out.cid, metadata=dict(out.metadata),
                version=versions[out.name],
                attestation_tx=effects.receipts[-1].tx_id,
            )
        request.state = DONE
        self._tokens.pop(request.callback_token, None)
        self._record(instance, effects, "TaskCompleted", {
            "instanceId": instance.instance_id,
            "outputs": [
                {"cid": o.cid, "metadata": o.metadata, "name": o.name,
                 "signature": o.signature, "version": versions[o.name]}
                for o in submitted
            ],
            "signer": signer_pub,
            "taskId": request.task_id,
        })
        instance.runtime.enqueue(f"task_done:{request.task_id}")
        self._drain(instance, effects)
        return effects

    # -- scopes ------------------------------------------------------------------

    def abort_scope(self, instance_id: str, scope_id: str, reason: str,
                    actor_pub: str, signature: str) -> Effects:
        instance = self.get_instance(instance_id)
        with instance.lock:
            scope = next((s for s in instance.program.scopes if s.id == scope_id), None)
            if scope is None:
                raise UnknownScope(scope_id)
            if instance.scope_states.get(scope_id) != "active":
                raise ScopeNotActive(
                    f"scope {scope_id!r} is "
                    f"{instance.scope_states.get(scope_id, 'not opened')}")
            bound = {instance.actor_bindings.get(lane)
                     for lane in scope.participating_lanes}
            if actor_pub not in bound:
                raise WrongActor(f"actor does not participate in {scope_id!r}")
            if not verify_signature(actor_pub,
                                    abort_message(instance_id, scope_id, reason),
                                    signature):
                raise BadSignature("abort signature does not verify")

            effects = Effects()
            nodes = set(scope.nodes)

            def in_scope(name: str) -> bool:
                subject = event_subject(name)
                if subject is None:
                    return False
                kind, ident = subject
                if kind == "lane":
                    return scope.kind == "top" and ident == scope.lane
                return ident in nodes

            instance.runtime.queue.discard(lambda e: in_scope(e.name))
            instance.runtime.discard_deferred(in_scope)
            for request in list(instance.requests.values()):
                if request.is_open() and request.task_id in nodes:
                    request.state = "Cancelled"
                    self._tokens.pop(request.callback_token, None)
                    del instance.requests[request.task_id]

            instance.scope_states[scope_id] = "aborted"
            self._record(instance, effects, "ScopeAborted", {
                "actor": actor_pub,
                "instanceId": instance_id,
                "reason": reason,
                "scopeId": scope_id,
                "signature": signature,
            })
            if scope.kind == "top":
                instance.status = ABORTED
                effects.status_change = ABORTED
                self._record(instance, effects, "InstanceAborted",
                             {"instanceId": instance_id, "reason": reason})
            else:
                self._fault(instance,
                            f"nested scope {scope_id} aborted: {reason}", effects)
            return effects

    # -- token persistence (service sidecar) -----------------------------------------

    def pending_token_map(self) -> dict[str, list[str]]:
        return {token: [iid, tid] for token, (iid, tid) in sorted(self._tokens.items())}

    def adopt_tokens(self, tokens: dict[str, list[str]]) -> None:
        """Replace regenerated tokens with persisted ones after a restart."""
        for token, (iid, tid) in tokens.items():
            instance = self.instances.get(iid)
            if instance is None:
                continue
            request = instance.requests.get(tid)
            if request is None or not request.is_open():
                continue
            self._tokens.pop(request.callback_token, None)
            request.callback_token = token
            self._tokens[token] = (iid, tid)

    # -- crash recovery -----------------------------------------------------------------

    def _replay(self, txs: list[Tx]) -> None:
        for pos, tx in enumerate(txs):
            if tx.method == "DeployProgram":
                self.deploy_signed(program_from_dict(tx.payload["program"]),
                                   tx.payload["deployer"], tx.payload["signature"])
            elif tx.method == "InstanceCreated":
                iid = tx.payload["instanceId"]
                self.create_signed(tx.payload["programId"],
                                   tx.payload["actorBindings"],
                                   tx.payload["creator"], tx.payload["signature"],
                                   instance_id=iid)
                nxt = txs[pos + 1] if pos + 1 < len(txs) else None
                if (nxt is not None and nxt.method == "ScopeOpened"
                        and nxt.payload.get("instanceId") == iid):
                    self.run_until_quiescent(iid)
            elif tx.method == "TaskCompleted":
                instance = self.get_instance(tx.payload["instanceId"])
                with instance.lock:
                    request = instance.requests.get(tx.payload["taskId"])
                    if request is None or not request.is_open():
                        raise CorruptState(
                            f"replayed completion of {tx.payload['taskId']!r} "
                            "does not match a live request")
                    outputs = [OutputSubmission(o["name"], o["cid"], o["metadata"],
                                                o["signature"])
                               for o in tx.payload["outputs"]]
                    self._complete_locked(instance, request, outputs,
                                          tx.payload["signer"])
            elif tx.method == "ScopeAborted":
                self.abort_scope(tx.payload["instanceId"], tx.payload["scopeId"],
                                 tx.payload["reason"], tx.payload["actor"],
                                 tx.payload["signature"])

    @classmethod
    def restore(cls, ledger: Ledger, store: DocStore, signer: Signer) -> "Monitor":
        """Rebuild state by re-executing the chain's external commands.

        The regenerated chain must reproduce the persisted block hashes
        exactly; any divergence means the chain and the engine disagree.
        """
        scratch = Ledger(path=None, batch_size=ledger.batch_size)
        monitor = cls(scratch, store, signer)
        monitor._replay(ledger.all_txs())
        if scratch.block_hashes() != ledger.block_hashes():
            raise CorruptState("replayed chain does not reproduce persisted hashes")
        monitor.ledger = ledger
        return monitor
