"""Deployable monitor program: canonical encoding plus the compile pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import json

from ..bpmn.graph import to_flow_graph
from ..bpmn.model import TASK, BpmnModel
from ..canonical import canonical_bytes, cid_of
from .flatten import Channel, DeFsm, FsmNetwork, FsmTransition, flatten_hsm
from .hsm import build_hsm
from .regions import detect_regions
from .scopes import TransactionScope, identify_scopes

PROGRAM_VERSION = 1


@dataclass(frozen=True)
class TaskFlow:
    inputs: tuple[str, ...]      # data object names, sorted
    outputs: tuple[str, ...]
    lane: str
    name: str
    purpose: str


@dataclass(frozen=True)
class MonitorProgram:
    program_id: str
    actors: tuple[tuple[str, str], ...]          # (lane id, display name)
    dataflow: dict[str, TaskFlow]                # task id -> flow
    network: FsmNetwork
    scopes: tuple[TransactionScope, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "actors": [{"id": i, "name": n} for i, n in self.actors],
            "dataflow": {
                task: {
                    "inputs": list(tf.inputs),
                    "lane": tf.lane,
                    "name": tf.name,
                    "outputs": list(tf.outputs),
                    "purpose": tf.purpose,
                }
                for task, tf in sorted(self.dataflow.items())
            },
            "network": {
                "channels": [
                    {"emitter": c.emitter, "event": c.event, "receiver": c.receiver}
                    for c in self.network.channels
                ],
                "machines": [
                    {
                        "accepting": list(m.accepting),
                        "id": m.id,
                        "initial": m.initial,
                        "lane": m.lane,
                        "states": list(m.states),
                        "transitions": [
                            {
                                "actions": list(t.actions),
                                "guard": t.guard,
                                "isDefault": t.is_default,
                                "source": t.source,
                                "target": t.target,
                                "trigger": t.trigger,
                            }
                            for t in m.transitions
                        ],
                    }
                    for m in self.network.machines
                ],
            },
            "scopes": [
                {
                    "entryEdge": s.entry_edge,
                    "exitEdge": s.exit_edge,
                    "id": s.id,
                    "kind": s.kind,
                    "lane": s.lane,
                    "nodes": list(s.nodes),
                    "participatingLanes": list(s.participating_lanes),
                }
                for s in self.scopes
            ],
            "version": PROGRAM_VERSION,
        }

    def to_bytes(self) -> bytes:
        return canonical_bytes(self.to_dict())

    def lane_ids(self) -> list[str]:
        return [lane for lane, _ in self.actors]

    def task_ids(self) -> list[str]:
        return sorted(self.dataflow)


def emit_program(
    network: FsmNetwork,
    scopes: tuple[TransactionScope, ...],
    dataflow: dict[str, TaskFlow],
    actors: tuple[tuple[str, str], ...],
) -> MonitorProgram:
    """Assemble and content-address the program; equal inputs give equal bytes."""
    program = MonitorProgram(
        program_id="",
        actors=tuple(sorted(actors)),
        dataflow=dict(sorted(dataflow.items())),
        network=network,
        scopes=tuple(sorted(scopes, key=lambda s: s.id)),
    )
    return _with_id(program)


def _with_id(program: MonitorProgram) -> MonitorProgram:
    pid = cid_of(program.to_bytes())
    return MonitorProgram(
        program_id=pid,
        actors=program.actors,
        dataflow=program.dataflow,
        network=program.network,
        scopes=program.scopes,
    )


def compile_model(model: BpmnModel) -> MonitorProgram:
    """Full pipeline: graph, regions, HSM, scopes, flat network, emission."""
    graph = to_flow_graph(model)
    regions = detect_regions(graph)
    hsm = build_hsm(graph, regions)
    scopes = tuple(identify_scopes(regions, model))
    network = flatten_hsm(hsm, scopes)

    data_names = {d.id: d.name for d in model.data_objects}
    dataflow = {}
    lane_of = model.lane_of_node()
    for _, node in model.nodes():
        if node.kind != TASK:
            continue
        dataflow[node.id] = TaskFlow(
            inputs=tuple(sorted(data_names[r] for r in node.data_inputs)),
            outputs=tuple(sorted(data_names[r] for r in node.data_outputs)),
            lane=lane_of[node.id],
            name=node.name,
            purpose=node.documentation,
        )
    actors = tuple(sorted((lane.id, lane.name) for _, lane in model.lanes()))
    return emit_program(network, scopes, dataflow, actors)


def program_from_dict(data: dict[str, Any]) -> MonitorProgram:
    machines = tuple(
        DeFsm(
            id=m["id"],
            lane=m["lane"],
            initial=m["initial"],
            states=tuple(m["states"]),
            accepting=tuple(m["accepting"]),
            transitions=tuple(
                FsmTransition(
                    source=t["source"],
                    trigger=t["trigger"],
                    guard=t["guard"],
                    is_default=t["isDefault"],
                    actions=tuple(t["actions"]),
                    target=t["target"],
                )
                for t in m["transitions"]
            ),
        )
        for m in data["network"]["machines"]
    )
    channels = tuple(
        Channel(emitter=c["emitter"], event=c["event"], receiver=c["receiver"])
        for c in data["network"]["channels"]
    )
    scopes = tuple(
        TransactionScope(
            id=s["id"],
            lane=s["lane"],
            kind=s["kind"],
            entry_edge=s["entryEdge"],
            exit_edge=s["exitEdge"],
            nodes=tuple(s["nodes"]),
            participating_lanes=tuple(s["participatingLanes"]),
        )
        for s in data["scopes"]
    )
    dataflow = {
        task: TaskFlow(
            inputs=tuple(tf["inputs"]),
            outputs=tuple(tf["outputs"]),
            lane=tf["lane"],
            name=tf["name"],
            purpose=tf["purpose"],
        )
        for task, tf in data["dataflow"].items()
    }
    actors = tuple((a["id"], a["name"]) for a in data["actors"])
    program = MonitorProgram(
        program_id="",
        actors=actors,
        dataflow=dataflow,
        network=FsmNetwork(machines=machines, channels=channels),
        scopes=scopes,
    )
    return _with_id(program)


def save_program(program: MonitorProgram, path: Path) -> None:
    Path(path).write_bytes(program.to_bytes())


def load_program(path: Path) -> MonitorProgram:
    data = json.loads(Path(path).read_bytes())
    return program_from_dict(data)
