"""Scripted end-to-end runs: deterministic scenarios drive an in-process
engine and check expectations step by step."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .compiler.program import MonitorProgram
from .docstore import DocStore, sign_attestation
from .engine import Monitor, OutputSubmission
from .keys import Signer
from .ledger import Ledger


class ScenarioError(Exception):
    """An expectation in the script did not hold; exit code 2 territory."""


@dataclass
class ScenarioResult:
    ok: bool
    instance_id: str
    trace: list[str]
    divergence: str | None = None


def load_scenario(path: Path) -> dict:
    data = json.loads(Path(path).read_text())
    if not isinstance(data.get("steps"), list):
        raise ValueError("scenario file needs a top-level 'steps' list")
    return data


def run_scenario(
    program: MonitorProgram,
    scenario: dict,
    keys: dict[str, Signer],
    ledger: Ledger,
    store: DocStore,
    monitor_key: Signer,
    base_dir: Path | None = None,
) -> ScenarioResult:
    """Execute a scenario; the first failed expectation stops the run."""
    monitor = Monitor(ledger, store, monitor_key)
    lanes = program.lane_ids()
    missing = [lane for lane in lanes if lane not in keys]
    if missing:
        raise ScenarioError(f"no keys for lanes {missing}; run keygen first")

    deployer = keys[sorted(lanes)[0]]
    trace: list[str] = []
    pid = monitor.deploy_program(program, deployer)
    trace.append(f"deployed program {pid}")
    bindings = {lane: keys[lane].public_hex for lane in lanes}
    iid = monitor.create_instance(pid, bindings, deployer)
    monitor.run_until_quiescent(iid)
    trace.append(f"created instance {iid}; pending="
                 f"{[r.task_id for r in monitor.pending_tasks(iid)]}")

    try:
        for step in scenario["steps"]:
            _apply_step(monitor, store, keys, iid, step, trace, base_dir)
    except ScenarioError as exc:
        trace.append(f"FAILED: {exc}")
        return ScenarioResult(ok=False, instance_id=iid, trace=trace,
                              divergence=str(exc))
    ledger.flush()
    trace.append(f"scenario complete; status={monitor.get_instance(iid).status}")
    return ScenarioResult(ok=True, instance_id=iid, trace=trace)


def _apply_step(monitor: Monitor, store: DocStore, keys: dict[str, Signer],
                iid: str, step: dict, trace: list[str],
                base_dir: Path | None) -> None:
    if "completeTask" in step:
        spec = step["completeTask"]
        wanted = spec["task"]
        pending = monitor.pending_tasks(iid)
        request = next(
            (r for r in pending if r.task_id == wanted or r.task_name == wanted), None)
        if request is None:
            raise ScenarioError(
                f"task {wanted!r} is not pending; pending={[r.task_id for r in pending]}")
        signer = keys[request.lane]
        instance = monitor.get_instance(iid)
        submissions = []
        for name in sorted(spec.get("outputs", {})):
            out = spec["outputs"][name]
            content = _output_content(out, base_dir)
            cid = store.put(content)
            prior = instance.data_context.get(name)
            version = prior.version + 1 if prior else 0
            att = sign_attestation(signer, iid, name, version, cid)
            submissions.append(OutputSubmission(
                name=name, cid=cid, metadata=out.get("metadata", {}),
                signature=att.signature))
        monitor.complete_task(iid, request.task_id, request.callback_token,
                              submissions, signer.public_hex)
        trace.append(f"completed {request.task_id}; pending="
                     f"{[r.task_id for r in monitor.pending_tasks(iid)]}")
        return

    if "abortScope" in step:
        spec = step["abortScope"]
        scope_id = spec["scope"]
        reason = spec.get("reason", "aborted by scenario")
        instance = monitor.get_instance(iid)
        scope = next((s for s in instance.program.scopes if s.id == scope_id), None)
        if scope is None:
            raise ScenarioError(f"unknown scope {scope_id!r}")
        actor = keys[scope.participating_lanes[0]]
        from .engine import abort_message

        signature = actor.sign(abort_message(iid, scope_id, reason))
        monitor.abort_scope(iid, scope_id, reason, actor.public_hex, signature)
        trace.append(f"aborted scope {scope_id}")
        return

    if "expectStatus" in step:
        actual = monitor.get_instance(iid).status
        if actual != step["expectStatus"]:
            raise ScenarioError(
                f"expected status {step['expectStatus']!r}, got {actual!r}")
        trace.append(f"status is {actual}")
        return

    if "expectPending" in step:
        expected = sorted(step["expectPending"])
        pending = monitor.pending_tasks(iid)
        actual_ids = sorted(r.task_id for r in pending)
        actual_names = sorted(r.task_name for r in pending)
        if expected not in (actual_ids, actual_names):
            raise ScenarioError(
                f"expected pending {expected}, got {actual_ids}")
        trace.append(f"pending is {actual_ids}")
        return

    raise ScenarioError(f"unknown step kind: {sorted(step)}")


def _output_content(out: dict, base_dir: Path | None) -> bytes:
    if "content" in out:
        return out["content"].encode("utf-8")
    if "contentB64" in out:
        import base64

        return base64.b64decode(out["contentB64"])
    if "file" in out:
        path = Path(out["file"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return path.read_bytes()
    raise ScenarioError("output needs 'content', 'contentB64' or 'file'")
