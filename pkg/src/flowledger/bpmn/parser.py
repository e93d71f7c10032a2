"""BPMN 2.0 XML subset parser.

Accepts the OMG model namespace (and namespace-free documents). Diagram
interchange (bpmndi/dc/di) subtrees are layout-only and skipped; any other
element outside the supported subset is a hard ``UnsupportedElement`` error
so flow semantics can never be lost silently.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from ..errors import DanglingReference, UnsupportedElement, XmlSyntax
from .guards import parse_guard
from .model import (
    END_EVENT,
    EXCLUSIVE_GATEWAY,
    MESSAGE_CATCH,
    MESSAGE_THROW,
    PARALLEL_GATEWAY,
    START_EVENT,
    TASK,
    BpmnModel,
    DataObject,
    FlowNode,
    Lane,
    MessageFlow,
    Pool,
    SequenceFlow,
)

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"

_IGNORED_NAMESPACES = (
    "http://www.omg.org/spec/BPMN/20100524/DI",
    "http://www.omg.org/spec/DD/20100524/DC",
    "http://www.omg.org/spec/DD/20100524/DI",
)

_NODE_TAGS = {
    "startEvent": START_EVENT,
    "endEvent": END_EVENT,
    "task": TASK,
}

# node children that repeat sequenceFlow information; skipping them loses nothing
_REDUNDANT_CHILDREN = {"incoming", "outgoing"}


def parse_bpmn(xml: bytes) -> BpmnModel:
    """Parse BPMN XML bytes into a typed model."""
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise XmlSyntax(f"malformed XML: {exc}") from exc

    if _local(root.tag) != "definitions":
        raise XmlSyntax(f"expected <definitions> root, got <{_local(root.tag)}>")

    processes: list[ET.Element] = []
    participants: list[tuple[str, str, str]] = []   # (id, name, processRef)
    raw_message_flows: list[ET.Element] = []
    message_names: dict[str, str] = {}              # message id -> name

    for child in root:
        if _skippable(child):
            continue
        tag = _local(child.tag)
        if tag == "process":
            processes.append(child)
        elif tag == "collaboration":
            for item in child:
                if _skippable(item):
                    continue
                itag = _local(item.tag)
                if itag == "participant":
                    participants.append((
                        _require_id(item),
                        item.get("name", "") or _require_id(item),
                        item.get("processRef", ""),
                    ))
                elif itag == "messageFlow":
                    raw_message_flows.append(item)
                else:
                    raise UnsupportedElement(itag, "collaboration")
        elif tag == "message":
            message_names[_require_id(child)] = child.get("name", "")
        else:
            raise UnsupportedElement(tag, "definitions")

    data_objects: list[DataObject] = []
    data_ref_alias: dict[str, str] = {}   # dataObjectReference id -> dataObject id
    pools: list[Pool] = []
    process_by_id: dict[str, ET.Element] = {p.get("id", ""): p for p in processes}

    for proc in processes:
        lanes, proc_data, aliases = _parse_process(proc)
        data_objects.extend(proc_data)
        data_ref_alias.update(aliases)
        proc_id = _require_id(proc)
        pool_name = proc.get("name", "") or proc_id
        part = next((p for p in participants if p[2] == proc_id), None)
        if part is not None:
            # a participant's implicit single lane takes the participant's
            # id/name so actor bindings read naturally
            if len(lanes) == 1 and lanes[0].id == proc_id:
                lane = lanes[0]
                lanes = [Lane(id=part[0], name=part[1], nodes=lane.nodes, flows=lane.flows)]
            pools.append(Pool(id=part[0], name=part[1], lanes=tuple(lanes)))
        else:
            pools.append(Pool(id=proc_id, name=pool_name, lanes=tuple(lanes)))

    for pid, pname, pref in participants:
        if pref and pref not in process_by_id:
            raise DanglingReference(f"participant {pid!r} references unknown process {pref!r}")

    data_by_name = {d.name: d for d in data_objects}
    node_ids = {n.id for pool in pools for lane in pool.lanes for n in lane.nodes}

    message_flows: list[MessageFlow] = []
    for mf in raw_message_flows:
        mf_id = _require_id(mf)
        source = mf.get("sourceRef", "")
        target = mf.get("targetRef", "")
        for ref in (source, target):
            if ref not in node_ids:
                raise DanglingReference(f"message flow {mf_id!r} references unknown node {ref!r}")
        carries = ""
        msg_ref = mf.get("messageRef", "")
        if msg_ref:
            if msg_ref not in message_names:
                raise DanglingReference(f"message flow {mf_id!r} references unknown message {msg_ref!r}")
            msg_name = message_names[msg_ref]
            if msg_name not in data_by_name:
                raise DanglingReference(
                    f"message {msg_ref!r} names unknown data object {msg_name!r}")
            carries = data_by_name[msg_name].id
        message_flows.append(MessageFlow(id=mf_id, source_node=source,
                                         target_node=target, carries=carries))

    model = BpmnModel(
        pools=tuple(pools),
        message_flows=tuple(message_flows),
        data_objects=tuple(data_objects),
    )
    _check_references(model)
    return model


def _parse_process(proc: ET.Element):
    proc_id = _require_id(proc)
    nodes: list[FlowNode] = []
    flows: list[tuple[str, str, str, str | None]] = []   # id, src, dst, guard text
    default_flows: set[str] = set()
    data_objects: list[DataObject] = []
    aliases: dict[str, str] = {}
    lane_defs: list[tuple[str, str, list[str]]] = []      # id, name, node refs
    pending_refs: list[ET.Element] = []

    for child in proc:
        if _skippable(child):
            continue
        tag = _local(child.tag)
        if tag == "laneSet":
            for lane_el in child:
                if _skippable(lane_el):
                    continue
                if _local(lane_el.tag) != "lane":
                    raise UnsupportedElement(_local(lane_el.tag), "laneSet")
                refs = [el.text.strip() for el in lane_el
                        if _local(el.tag) == "flowNodeRef" and el.text]
                lane_defs.append((
                    _require_id(lane_el),
                    lane_el.get("name", "") or _require_id(lane_el),
                    refs,
                ))
        elif tag in _NODE_TAGS:
            nodes.append(_parse_flow_node(child, _NODE_TAGS[tag]))
        elif tag == "parallelGateway":
            nodes.append(_parse_flow_node(child, PARALLEL_GATEWAY))
        elif tag == "exclusiveGateway":
            nodes.append(_parse_flow_node(child, EXCLUSIVE_GATEWAY))
            default = child.get("default", "")
            if default:
                default_flows.add(default)
        elif tag == "intermediateCatchEvent":
            nodes.append(_parse_message_event(child, MESSAGE_CATCH))
        elif tag == "intermediateThrowEvent":
            nodes.append(_parse_message_event(child, MESSAGE_THROW))
        elif tag == "sequenceFlow":
            flow_id = _require_id(child)
            guard_text = None
            for sub in child:
                if _skippable(sub):
                    continue
                stag = _local(sub.tag)
                if stag == "conditionExpression":
                    guard_text = (sub.text or "").strip()
                elif stag != "documentation":
                    raise UnsupportedElement(stag, f"sequenceFlow {flow_id}")
            flows.append((flow_id, child.get("sourceRef", ""),
                          child.get("targetRef", ""), guard_text))
        elif tag == "dataObject":
            data_objects.append(DataObject(
                id=_require_id(child),
                name=child.get("name", "") or _require_id(child),
                schema_hint=child.get("schemaHint", ""),
            ))
        elif tag == "dataObjectReference":
            pending_refs.append(child)
        else:
            raise UnsupportedElement(tag, f"process {proc_id}")

    data_ids = {d.id for d in data_objects}
    for ref in pending_refs:
        ref_id = _require_id(ref)
        target = ref.get("dataObjectRef", "")
        if target not in data_ids:
            raise DanglingReference(
                f"dataObjectReference {ref_id!r} references unknown data object {target!r}")
        aliases[ref_id] = target

    # associations were parsed against raw refs; rewrite reference aliases
    nodes = [
        FlowNode(
            id=n.id, kind=n.kind, name=n.name, documentation=n.documentation,
            data_inputs=tuple(aliases.get(r, r) for r in n.data_inputs),
            data_outputs=tuple(aliases.get(r, r) for r in n.data_outputs),
        )
        for n in nodes
    ]

    sequence_flows = []
    for flow_id, src, dst, guard_text in flows:
        guard = parse_guard(guard_text) if guard_text else None
        sequence_flows.append(SequenceFlow(
            id=flow_id, source=src, target=dst, guard=guard,
            is_default=flow_id in default_flows,
        ))

    if lane_defs:
        node_by_id = {n.id: n for n in nodes}
        claimed: set[str] = set()
        lanes = []
        for lane_id, lane_name, refs in lane_defs:
            for ref in refs:
                if ref not in node_by_id:
                    raise DanglingReference(f"lane {lane_id!r} references unknown node {ref!r}")
                claimed.add(ref)
            lane_nodes = tuple(n for n in nodes if n.id in set(refs))
            lane_node_ids = {n.id for n in lane_nodes}
            lane_flows = tuple(f for f in sequence_flows if f.source in lane_node_ids)
            lanes.append(Lane(id=lane_id, name=lane_name, nodes=lane_nodes, flows=lane_flows))
        unclaimed = [n.id for n in nodes if n.id not in claimed]
        if unclaimed:
            raise DanglingReference(
                f"process {proc_id!r} has nodes outside any lane: {unclaimed}")
    else:
        lanes = [Lane(
            id=proc_id,
            name=proc.get("name", "") or proc_id,
            nodes=tuple(nodes),
            flows=tuple(sequence_flows),
        )]
    return lanes, data_objects, aliases


def _parse_flow_node(el: ET.Element, kind: str) -> FlowNode:
    node_id = _require_id(el)
    documentation = ""
    data_inputs: list[str] = []
    data_outputs: list[str] = []
    for child in el:
        if _skippable(child):
            continue
        tag = _local(child.tag)
        if tag == "documentation":
            documentation = (child.text or "").strip()
        elif tag == "dataInputAssociation":
            data_inputs.append(_association_ref(child, "sourceRef", node_id))
        elif tag == "dataOutputAssociation":
            data_outputs.append(_association_ref(child, "targetRef", node_id))
        elif tag in _REDUNDANT_CHILDREN:
            continue
        else:
            raise UnsupportedElement(tag, f"node {node_id}")
    return FlowNode(
        id=node_id, kind=kind, name=el.get("name", "") or node_id,
        documentation=documentation,
        data_inputs=tuple(data_inputs), data_outputs=tuple(data_outputs),
    )


def _parse_message_event(el: ET.Element, kind: str) -> FlowNode:
    node_id = _require_id(el)
    documentation = ""
    has_message_def = False
    for child in el:
        if _skippable(child):
            continue
        tag = _local(child.tag)
        if tag == "messageEventDefinition":
            has_message_def = True
        elif tag == "documentation":
            documentation = (child.text or "").strip()
        elif tag in _REDUNDANT_CHILDREN:
            continue
        else:
            raise UnsupportedElement(tag, f"event {node_id}")
    if not has_message_def:
        raise UnsupportedElement("intermediate event without messageEventDefinition", node_id)
    return FlowNode(id=node_id, kind=kind, name=el.get("name", "") or node_id,
                    documentation=documentation)


def _association_ref(assoc: ET.Element, ref_tag: str, node_id: str) -> str:
    for child in assoc:
        if _local(child.tag) == ref_tag and child.text:
            return child.text.strip()
    raise XmlSyntax(f"data association on {node_id!r} lacks <{ref_tag}>")


def _check_references(model: BpmnModel) -> None:
    node_ids = {n.id for _, n in model.nodes()}
    data_ids = {d.id for d in model.data_objects}
    for _, lane in model.lanes():
        for flow in lane.flows:
            for ref in (flow.source, flow.target):
                if ref not in node_ids:
                    raise DanglingReference(
                        f"sequence flow {flow.id!r} references unknown node {ref!r}")
    for _, node in model.nodes():
        for ref in list(node.data_inputs) + list(node.data_outputs):
            if ref not in data_ids:
                raise DanglingReference(
                    f"node {node.id!r} references unknown data object {ref!r}")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _namespace(tag: str) -> str:
    if tag.startswith("{"):
        return tag[1:].split("}", 1)[0]
    return ""


def _skippable(el: ET.Element) -> bool:
    if not isinstance(el.tag, str):
        return True   # comments / processing instructions
    ns = _namespace(el.tag)
    if ns in _IGNORED_NAMESPACES:
        return True
    if ns and ns != BPMN_NS:
        raise UnsupportedElement(_local(el.tag), f"namespace {ns}")
    return False


def _require_id(el: ET.Element) -> str:
    value = el.get("id", "")
    if not value:
        raise XmlSyntax(f"<{_local(el.tag)}> element is missing an id attribute")
    return value
