"""Typed BPMN model subset: pools, lanes, flow nodes, flows, data elements.

The supported subset is: start/end events, tasks, parallel and exclusive
gateways, message catch/throw events, pools/lanes, sequence flows, message
flows, data objects and data input/output associations, plus task
documentation text. Anything else is rejected at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Iterator

from ..canonical import canonical_text
from .guards import GuardExpr, guard_from_json, guard_to_json

START_EVENT = "startEvent"
END_EVENT = "endEvent"
TASK = "task"
PARALLEL_GATEWAY = "parallelGateway"
EXCLUSIVE_GATEWAY = "exclusiveGateway"
MESSAGE_CATCH = "messageCatch"
MESSAGE_THROW = "messageThrow"

NODE_KINDS = frozenset({
    START_EVENT, END_EVENT, TASK, PARALLEL_GATEWAY, EXCLUSIVE_GATEWAY,
    MESSAGE_CATCH, MESSAGE_THROW,
})
GATEWAY_KINDS = frozenset({PARALLEL_GATEWAY, EXCLUSIVE_GATEWAY})


@dataclass(frozen=True)
class FlowNode:
    id: str
    kind: str
    name: str = ""
    documentation: str = ""
    data_inputs: tuple[str, ...] = ()   # data object ids
    data_outputs: tuple[str, ...] = ()


@dataclass(frozen=True)
class SequenceFlow:
    id: str
    source: str
    target: str
    guard: GuardExpr | None = None
    is_default: bool = False


@dataclass(frozen=True)
class Lane:
    id: str
    name: str
    nodes: tuple[FlowNode, ...] = ()
    flows: tuple[SequenceFlow, ...] = ()


@dataclass(frozen=True)
class Pool:
    id: str
    name: str
    lanes: tuple[Lane, ...] = ()


@dataclass(frozen=True)
class DataObject:
    id: str
    name: str
    schema_hint: str = ""


@dataclass(frozen=True)
class MessageFlow:
    id: str
    source_node: str
    target_node: str
    carries: str = ""   # data object id, optional


@dataclass(frozen=True)
class BpmnModel:
    pools: tuple[Pool, ...] = ()
    message_flows: tuple[MessageFlow, ...] = ()
    data_objects: tuple[DataObject, ...] = ()

    def lanes(self) -> Iterator[tuple[Pool, Lane]]:
        for pool in self.pools:
            for lane in pool.lanes:
                yield pool, lane

    def nodes(self) -> Iterator[tuple[Lane, FlowNode]]:
        for _, lane in self.lanes():
            for node in lane.nodes:
                yield lane, node

    def node_by_id(self) -> dict[str, FlowNode]:
        return {node.id: node for _, node in self.nodes()}

    def lane_of_node(self) -> dict[str, str]:
        return {node.id: lane.id for lane, node in self.nodes()}

    def data_object_by_id(self) -> dict[str, DataObject]:
        return {d.id: d for d in self.data_objects}

    def flow_count(self) -> int:
        return sum(len(lane.flows) for _, lane in self.lanes())

    def node_count(self) -> int:
        return sum(len(lane.nodes) for _, lane in self.lanes())

    def association_count(self) -> int:
        return sum(
            len(node.data_inputs) + len(node.data_outputs) for _, node in self.nodes()
        )

    def tasks(self) -> list[FlowNode]:
        return [node for _, node in self.nodes() if node.kind == TASK]


@dataclass(frozen=True)
class Diagnostic:
    severity: str       # "error" | "warning"
    code: str
    node: str           # offending node/flow id, may be ""
    message: str

    def is_error(self) -> bool:
        return self.severity == "error"


# --- canonical JSON serialization -------------------------------------------

def model_to_dict(model: BpmnModel) -> dict[str, Any]:
    return {
        "dataObjects": [
            {"id": d.id, "name": d.name, "schemaHint": d.schema_hint}
            for d in model.data_objects
        ],
        "messageFlows": [
            {
                "carries": f.carries,
                "id": f.id,
                "sourceNode": f.source_node,
                "targetNode": f.target_node,
            }
            for f in model.message_flows
        ],
        "pools": [
            {
                "id": pool.id,
                "lanes": [
                    {
                        "flows": [
                            {
                                "guard": guard_to_json(fl.guard),
                                "id": fl.id,
                                "isDefault": fl.is_default,
                                "source": fl.source,
                                "target": fl.target,
                            }
                            for fl in lane.flows
                        ],
                        "id": lane.id,
                        "name": lane.name,
                        "nodes": [
                            {
                                "dataInputs": list(n.data_inputs),
                                "dataOutputs": list(n.data_outputs),
                                "documentation": n.documentation,
                                "id": n.id,
                                "kind": n.kind,
                                "name": n.name,
                            }
                            for n in lane.nodes
                        ],
                    }
                    for lane in pool.lanes
                ],
                "name": pool.name,
            }
            for pool in model.pools
        ],
    }


def model_to_json(model: BpmnModel) -> str:
    """Canonical JSON serialization (sorted keys, no extra whitespace)."""
    return canonical_text(model_to_dict(model))


def model_from_dict(data: dict[str, Any]) -> BpmnModel:
    pools = tuple(
        Pool(
            id=p["id"],
            name=p["name"],
            lanes=tuple(
                Lane(
                    id=ln["id"],
                    name=ln["name"],
                    nodes=tuple(
                        FlowNode(
                            id=n["id"],
                            kind=n["kind"],
                            name=n["name"],
                            documentation=n["documentation"],
                            data_inputs=tuple(n["dataInputs"]),
                            data_outputs=tuple(n["dataOutputs"]),
                        )
                        for n in ln["nodes"]
                    ),
                    flows=tuple(
                        SequenceFlow(
                            id=f["id"],
                            source=f["source"],
                            target=f["target"],
                            guard=guard_from_json(f["guard"]),
                            is_default=f["isDefault"],
                        )
                        for f in ln["flows"]
                    ),
                )
                for ln in p["lanes"]
            ),
        )
        for p in data["pools"]
    )
    message_flows = tuple(
        MessageFlow(
            id=m["id"],
            source_node=m["sourceNode"],
            target_node=m["targetNode"],
            carries=m["carries"],
        )
        for m in data["messageFlows"]
    )
    data_objects = tuple(
        DataObject(id=d["id"], name=d["name"], schema_hint=d["schemaHint"])
        for d in data["dataObjects"]
    )
    return BpmnModel(pools=pools, message_flows=message_flows, data_objects=data_objects)


# --- validation --------------------------------------------------------------

def validate_model(model: BpmnModel) -> list[Diagnostic]:
    """Check every model invariant; an empty list means the model is valid."""
    diags: list[Diagnostic] = []
    err = lambda code, node, msg: diags.append(Diagnostic("error", code, node, msg))

    nodes = {}
    lane_of: dict[str, str] = {}
    for lane, node in model.nodes():
        if node.id in nodes:
            err("DuplicateId", node.id, f"node id {node.id!r} appears more than once")
        nodes[node.id] = node
        lane_of[node.id] = lane.id

    seen_flow_ids: set[str] = set()
    for _, lane in model.lanes():
        for flow in lane.flows:
            if flow.id in seen_flow_ids or flow.id in nodes:
                err("DuplicateId", flow.id, f"flow id {flow.id!r} appears more than once")
            seen_flow_ids.add(flow.id)

    data_by_id = {}
    names_seen: set[str] = set()
    for d in model.data_objects:
        if d.id in data_by_id:
            err("DuplicateId", d.id, f"data object id {d.id!r} appears more than once")
        if d.name in names_seen:
            err("DuplicateDataObjectName", d.id, f"data object name {d.name!r} is not unique")
        names_seen.add(d.name)
        data_by_id[d.id] = d

    incoming: dict[str, list[SequenceFlow]] = {nid: [] for nid in nodes}
    outgoing: dict[str, list[SequenceFlow]] = {nid: [] for nid in nodes}

    for _, lane in model.lanes():
        lane_node_ids = {n.id for n in lane.nodes}
        for flow in lane.flows:
            for end, label in ((flow.source, "source"), (flow.target, "target")):
                if end not in nodes:
                    err("DanglingReference", flow.id, f"flow {flow.id!r} {label} {end!r} does not exist")
                elif end not in lane_node_ids:
                    err("CrossLaneFlow", flow.id,
                        f"flow {flow.id!r} {label} {end!r} is outside lane {lane.id!r}")
            if flow.source in nodes:
                outgoing.setdefault(flow.source, []).append(flow)
            if flow.target in nodes:
                incoming.setdefault(flow.target, []).append(flow)

    # guards only on flows leaving an exclusive gateway; one default per gateway
    for _, lane in model.lanes():
        for flow in lane.flows:
            src = nodes.get(flow.source)
            if flow.guard is not None and (src is None or src.kind != EXCLUSIVE_GATEWAY):
                err("GuardOutsideXor", flow.id,
                    f"flow {flow.id!r} carries a guard but does not leave an exclusive gateway")
            if flow.is_default and (src is None or src.kind != EXCLUSIVE_GATEWAY):
                err("DefaultOutsideXor", flow.id,
                    f"flow {flow.id!r} is marked default but does not leave an exclusive gateway")

    for nid, node in nodes.items():
        if node.kind == EXCLUSIVE_GATEWAY:
            defaults = [f for f in outgoing.get(nid, []) if f.is_default]
            if len(defaults) > 1:
                err("MultipleDefaults", nid,
                    f"exclusive gateway {nid!r} has {len(defaults)} default flows")

    # gateways carry no data associations; shape of parallel gateways
    for nid, node in nodes.items():
        n_in = len(incoming.get(nid, ()))
        n_out = len(outgoing.get(nid, ()))
        if node.kind in GATEWAY_KINDS and (node.data_inputs or node.data_outputs):
            err("GatewayDataAssociation", nid, f"gateway {nid!r} has data associations")
        if node.kind == PARALLEL_GATEWAY:
            is_split = n_in == 1 and n_out >= 2
            is_join = n_in >= 2 and n_out == 1
            if not (is_split or is_join):
                err("MalformedParallelGateway", nid,
                    f"parallel gateway {nid!r} has {n_in} incoming and {n_out} outgoing flows")
        if node.kind == EXCLUSIVE_GATEWAY:
            if not ((n_in == 1 and n_out >= 2) or (n_in >= 2 and n_out == 1)):
                err("MalformedExclusiveGateway", nid,
                    f"exclusive gateway {nid!r} has {n_in} incoming and {n_out} outgoing flows")
            if n_in == 1 and n_out >= 2:
                for f in outgoing.get(nid, ()):
                    if f.guard is None and not f.is_default:
                        err("UnguardedDecisionFlow", f.id,
                            f"flow {f.id!r} leaving exclusive split {nid!r} has neither guard nor default")
        if node.kind == START_EVENT and n_in:
            err("StartEventWithInput", nid, f"start event {nid!r} has incoming flows")
        if node.kind == END_EVENT and n_out:
            err("EndEventWithOutput", nid, f"end event {nid!r} has outgoing flows")

    # data associations resolve
    for nid, node in nodes.items():
        for ref in list(node.data_inputs) + list(node.data_outputs):
            if ref not in data_by_id:
                err("DanglingReference", nid,
                    f"node {nid!r} references unknown data object {ref!r}")

    # lane shape: exactly one start, at least one end, reachability, acyclic
    for _, lane in model.lanes():
        starts = [n for n in lane.nodes if n.kind == START_EVENT]
        ends = [n for n in lane.nodes if n.kind == END_EVENT]
        if len(starts) != 1:
            err("LaneStartCount", lane.id,
                f"lane {lane.id!r} has {len(starts)} start events, expected exactly 1")
        if not ends:
            err("LaneEndCount", lane.id, f"lane {lane.id!r} has no end event")
        if len(starts) == 1:
            succ = {n.id: [] for n in lane.nodes}
            for f in lane.flows:
                if f.source in succ and f.target in succ:
                    succ[f.source].append(f.target)
            reached = set()
            stack = [starts[0].id]
            while stack:
                cur = stack.pop()
                if cur in reached:
                    continue
                reached.add(cur)
                stack.extend(succ[cur])
            for n in lane.nodes:
                if n.id not in reached:
                    err("Unreachable", n.id,
                        f"node {n.id!r} is not reachable from lane {lane.id!r} start event")
            if _has_cycle(succ):
                err("CycleDetected", lane.id, f"lane {lane.id!r} contains a cycle")
            else:
                diags.extend(_check_parallel_balance(lane, nodes, incoming, outgoing))

    # message flows: cross lanes, endpoint kinds, resolvable carries
    catch_in: dict[str, int] = {}
    throw_out: dict[str, int] = {}
    for mf in model.message_flows:
        src, dst = nodes.get(mf.source_node), nodes.get(mf.target_node)
        if src is None or dst is None:
            err("DanglingReference", mf.id, f"message flow {mf.id!r} endpoint does not exist")
            continue
        if lane_of[mf.source_node] == lane_of[mf.target_node]:
            err("MessageFlowSameLane", mf.id,
                f"message flow {mf.id!r} does not cross lanes")
        if src.kind not in (TASK, MESSAGE_THROW):
            err("MessageFlowSource", mf.id,
                f"message flow {mf.id!r} source must be a task or message throw")
        if dst.kind not in (TASK, MESSAGE_CATCH):
            err("MessageFlowTarget", mf.id,
                f"message flow {mf.id!r} target must be a task or message catch")
        if mf.carries and mf.carries not in data_by_id:
            err("DanglingReference", mf.id,
                f"message flow {mf.id!r} carries unknown data object {mf.carries!r}")
        catch_in[mf.target_node] = catch_in.get(mf.target_node, 0) + 1
        throw_out[mf.source_node] = throw_out.get(mf.source_node, 0) + 1

    for nid, node in nodes.items():
        if node.kind == MESSAGE_CATCH and catch_in.get(nid, 0) == 0:
            err("UnmatchedMessageCatch", nid, f"catch event {nid!r} has no incoming message flow")
        if node.kind == MESSAGE_THROW and throw_out.get(nid, 0) == 0:
            err("UnmatchedMessageThrow", nid, f"throw event {nid!r} has no outgoing message flow")
        if node.kind in (MESSAGE_CATCH, TASK) and catch_in.get(nid, 0) > 1:
            err("MultipleMessageInputs", nid,
                f"node {nid!r} has {catch_in[nid]} incoming message flows, at most 1 supported")

    return diags


def _has_cycle(succ: dict[str, list[str]]) -> bool:
    color = {nid: 0 for nid in succ}   # 0 unseen, 1 on stack, 2 done

    def visit(nid: str) -> bool:
        color[nid] = 1
        for nxt in succ[nid]:
            if color[nxt] == 1 or (color[nxt] == 0 and visit(nxt)):
                return True
        color[nid] = 2
        return False

    return any(color[nid] == 0 and visit(nid) for nid in succ)


def _check_parallel_balance(lane, nodes, incoming, outgoing) -> list[Diagnostic]:
    """Every parallel split must have a matching parallel join on all branches.

    Checked through immediate postdominance on the lane graph with a virtual
    exit joining all end events: the nearest node that all branches of a split
    must pass through has to be a parallel join.
    """
    diags = []
    ids = [n.id for n in lane.nodes]
    succ = {nid: [f.target for f in outgoing.get(nid, ()) if nodes.get(f.target)] for nid in ids}
    virtual_exit = "__exit__"
    pred_of_exit = [n.id for n in lane.nodes if n.kind == END_EVENT]
    ipdom = _immediate_postdominators(ids, succ, pred_of_exit, virtual_exit)

    for node in lane.nodes:
        if node.kind != PARALLEL_GATEWAY:
            continue
        if len(outgoing.get(node.id, ())) < 2:
            continue   # join side, shape already checked
        join = ipdom.get(node.id)
        join_node = nodes.get(join) if join else None
        if join_node is None or join_node.kind != PARALLEL_GATEWAY:
            diags.append(Diagnostic(
                "error", "UnbalancedParallelGateway", node.id,
                f"parallel split {node.id!r} has no matching join covering all branches"))
    return diags


def _immediate_postdominators(ids, succ, exit_preds, virtual_exit):
    """Iterative postdominator computation on a small acyclic lane graph."""
    all_ids = list(ids) + [virtual_exit]
    succ = {nid: list(succ.get(nid, [])) for nid in ids}
    for nid in exit_preds:
        succ.setdefault(nid, []).append(virtual_exit)
    succ[virtual_exit] = []

    pdom: dict[str, set[str]] = {nid: set(all_ids) for nid in all_ids}
    pdom[virtual_exit] = {virtual_exit}
    changed = True
    while changed:
        changed = False
        for nid in ids:
            outs = succ.get(nid, [])
            if outs:
                new = set.intersection(*(pdom[s] for s in outs)) | {nid}
            else:
                new = {nid}
            if new != pdom[nid]:
                pdom[nid] = new
                changed = True

    ipdom: dict[str, str | None] = {}
    for nid in ids:
        strict = pdom[nid] - {nid}
        best = None
        for cand in strict:
            # immediate postdominator: the strict postdominator that every
            # other strict postdominator still lies behind
            if all(o in pdom[cand] or o == cand for o in strict):
                best = cand
                break
        ipdom[nid] = best if best != virtual_exit else None
    return ipdom


def require_valid(model: BpmnModel) -> None:
    from ..errors import InvalidModel

    diags = [d for d in validate_model(model) if d.is_error()]
    if diags:
        raise InvalidModel(diags)


__all__ = [
    "BpmnModel", "Pool", "Lane", "FlowNode", "SequenceFlow", "DataObject",
    "MessageFlow", "Diagnostic", "validate_model", "require_valid",
    "model_to_dict", "model_to_json", "model_from_dict", "replace", "field",
    "START_EVENT", "END_EVENT", "TASK", "PARALLEL_GATEWAY",
    "EXCLUSIVE_GATEWAY", "MESSAGE_CATCH", "MESSAGE_THROW",
    "NODE_KINDS", "GATEWAY_KINDS",
]
