"""Shared fixtures: parsed fixture models, compiled programs, and an engine
harness that signs completions the way a real actor would."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from flowledger.bpmn import parse_bpmn
from flowledger.compiler import MonitorProgram, compile_model
from flowledger.docstore import DocStore, sign_attestation
from flowledger.engine import Monitor, OutputSubmission
from flowledger.keys import Signer, signer_from_label
from flowledger.ledger import Ledger


def fixture_bytes(name: str) -> bytes:
    return (resources.files("flowledger") / f"fixtures/{name}").read_bytes()


@pytest.fixture(scope="session")
def harvester_model():
    return parse_bpmn(fixture_bytes("harvester-sale.bpmn"))


@pytest.fixture(scope="session")
def collab_model():
    return parse_bpmn(fixture_bytes("harvester-sale-collab.bpmn"))


@pytest.fixture(scope="session")
def harvester_program(harvester_model) -> MonitorProgram:
    return compile_model(harvester_model)


@pytest.fixture(scope="session")
def collab_program(collab_model) -> MonitorProgram:
    return compile_model(collab_model)


class EngineHarness:
    """Monitor + ledger + store with per-lane demo signers."""

    def __init__(self, chain_path: Path | None = None, batch_size: int = 1,
                 store: DocStore | None = None):
        self.ledger = Ledger(chain_path, batch_size=batch_size)
        self.store = store if store is not None else DocStore()
        self.monitor_key = signer_from_label("harness:monitor")
        self.monitor = Monitor(self.ledger, self.store, self.monitor_key)
        self.keys: dict[str, Signer] = {}

    def signer_for(self, lane: str) -> Signer:
        if lane not in self.keys:
            self.keys[lane] = signer_from_label(f"harness:{lane}")
        return self.keys[lane]

    def start(self, program: MonitorProgram, run: bool = True) -> str:
        deployer = self.signer_for(program.lane_ids()[0])
        if program.program_id not in self.monitor.programs:
            self.monitor.deploy_program(program, deployer)
        bindings = {lane: self.signer_for(lane).public_hex
                    for lane in program.lane_ids()}
        iid = self.monitor.create_instance(program.program_id, bindings, deployer)
        if run:
            self.monitor.run_until_quiescent(iid)
        return iid

    def pending_ids(self, iid: str) -> list[str]:
        return [r.task_id for r in self.monitor.pending_tasks(iid)]

    def submission(self, iid: str, name: str, content: bytes,
                   metadata: dict, signer: Signer) -> OutputSubmission:
        cid = self.store.put(content)
        instance = self.monitor.get_instance(iid)
        prior = instance.data_context.get(name)
        version = prior.version + 1 if prior else 0
        att = sign_attestation(signer, iid, name, version, cid)
        return OutputSubmission(name=name, cid=cid, metadata=metadata,
                                signature=att.signature)

    def complete(self, iid: str, task_id: str,
                 outputs: dict[str, tuple[bytes, dict]] | None = None,
                 signer: Signer | None = None, token: str | None = None):
        instance = self.monitor.get_instance(iid)
        request = instance.requests[task_id]
        actor = signer or self.signer_for(request.lane)
        submissions = [
            self.submission(iid, name, content, metadata, actor)
            for name, (content, metadata) in sorted((outputs or {}).items())
        ]
        return self.monitor.complete_task(
            iid, task_id, token if token is not None else request.callback_token,
            submissions, actor.public_hex)

    def drive_to_completion(self, iid: str, max_steps: int = 200) -> str:
        """Complete every pending task with conforming outputs until done."""
        instance = self.monitor.get_instance(iid)
        for _ in range(max_steps):
            pending = self.pending_ids(iid)
            if not pending or instance.status != "Running":
                break
            task_id = pending[0]
            flow = instance.program.dataflow[task_id]
            outputs = {
                name: (f"{iid}:{task_id}:{name}".encode(), {})
                for name in flow.outputs
            }
            self.complete(iid, task_id, outputs)
        return instance.status


@pytest.fixture
def harness() -> EngineHarness:
    return EngineHarness()
