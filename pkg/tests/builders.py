"""Hand-built model variants used across tests."""

from __future__ import annotations

from flowledger.bpmn import parse_bpmn
from flowledger.bpmn.model import (
    BpmnModel,
    DataObject,
    FlowNode,
    Lane,
    Pool,
    SequenceFlow,
)

MINIMAL_XML = b"""<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL" id="d1">
  <process id="P" name="P">
    <startEvent id="s"/>
    <endEvent id="e"/>
    <sequenceFlow id="f1" sourceRef="s" targetRef="e"/>
  </process>
</definitions>
"""


def minimal_model() -> BpmnModel:
    return parse_bpmn(MINIMAL_XML)


XOR_XML_TEMPLATE = """<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL" id="d2">
  <process id="Seller" name="Seller">
    <startEvent id="start"/>
    <task id="RecAgr" name="RecAgr">
      <documentation>Decide whether the purchase offer is acceptable.</documentation>
      <dataOutputAssociation id="doa1"><targetRef>do_SalesAgr</targetRef></dataOutputAssociation>
    </task>
    <exclusiveGateway id="decide" {default_attr}/>
    <task id="GetTrReq" name="GetTrReq">
      <documentation>Find transport requirements for the accepted sale.</documentation>
      <dataInputAssociation id="dia1"><sourceRef>do_SalesAgr</sourceRef></dataInputAssociation>
      <dataOutputAssociation id="doa2"><targetRef>do_TrRequirements</targetRef></dataOutputAssociation>
    </task>
    <endEvent id="endOk"/>
    <endEvent id="endRej"/>
    <sequenceFlow id="f1" sourceRef="start" targetRef="RecAgr"/>
    <sequenceFlow id="f2" sourceRef="RecAgr" targetRef="decide"/>
    <sequenceFlow id="f3" sourceRef="decide" targetRef="GetTrReq">
      <conditionExpression>SalesAgr.accepted == true</conditionExpression>
    </sequenceFlow>
    <sequenceFlow id="f4" sourceRef="decide" targetRef="endRej">{reject_guard}</sequenceFlow>
    <sequenceFlow id="f5" sourceRef="GetTrReq" targetRef="endOk"/>
    <dataObject id="do_SalesAgr" name="SalesAgr"/>
    <dataObject id="do_TrRequirements" name="TrRequirements"/>
  </process>
</definitions>
"""


def xor_model(with_default: bool = True) -> BpmnModel:
    if with_default:
        xml = XOR_XML_TEMPLATE.format(default_attr='default="f4"', reject_guard="")
    else:
        xml = XOR_XML_TEMPLATE.format(
            default_attr="",
            reject_guard="<conditionExpression>SalesAgr.accepted == false"
                         "</conditionExpression>")
    return parse_bpmn(xml.encode())


def xor_model_no_fallback() -> BpmnModel:
    """Accept guard only; the reject arm demands accepted == false explicitly,
    so metadata without a verdict faults at the gateway."""
    return xor_model(with_default=False)


def _lane(nodes, flows) -> BpmnModel:
    lane = Lane(id="L", name="L", nodes=tuple(nodes), flows=tuple(flows))
    return BpmnModel(pools=(Pool(id="P", name="P", lanes=(lane,)),))


def unbalanced_parallel_model() -> BpmnModel:
    """One branch of the split leaves the process without rejoining."""
    nodes = [
        FlowNode("start", "startEvent"),
        FlowNode("split", "parallelGateway"),
        FlowNode("A", "task"),
        FlowNode("B", "task"),
        FlowNode("join", "parallelGateway"),
        FlowNode("end", "endEvent"),
        FlowNode("leak", "endEvent"),
    ]
    flows = [
        SequenceFlow("f1", "start", "split"),
        SequenceFlow("f2", "split", "A"),
        SequenceFlow("f3", "split", "B"),
        SequenceFlow("f4", "A", "join"),
        SequenceFlow("f5", "B", "leak"),
        SequenceFlow("f6", "join", "end"),
    ]
    return _lane(nodes, flows)


def guard_on_task_flow_model() -> BpmnModel:
    from flowledger.bpmn import parse_guard

    nodes = [
        FlowNode("start", "startEvent"),
        FlowNode("A", "task"),
        FlowNode("end", "endEvent"),
    ]
    flows = [
        SequenceFlow("f1", "start", "A"),
        SequenceFlow("f2", "A", "end", guard=parse_guard("D0.x == 1")),
    ]
    model = _lane(nodes, flows)
    return BpmnModel(pools=model.pools,
                     data_objects=(DataObject("d0", "D0"),))


def nested_parallel_model() -> BpmnModel:
    """Outer parallel region whose second branch holds an inner region."""
    nodes = [
        FlowNode("start", "startEvent"),
        FlowNode("T0", "task"),
        FlowNode("s1", "parallelGateway"),
        FlowNode("A", "task"),
        FlowNode("s2", "parallelGateway"),
        FlowNode("B", "task"),
        FlowNode("C", "task"),
        FlowNode("j2", "parallelGateway"),
        FlowNode("D", "task"),
        FlowNode("j1", "parallelGateway"),
        FlowNode("T9", "task"),
        FlowNode("end", "endEvent"),
    ]
    flows = [
        SequenceFlow("f01", "start", "T0"),
        SequenceFlow("f02", "T0", "s1"),
        SequenceFlow("f03", "s1", "A"),
        SequenceFlow("f04", "A", "j1"),
        SequenceFlow("f05", "s1", "s2"),
        SequenceFlow("f06", "s2", "B"),
        SequenceFlow("f07", "s2", "C"),
        SequenceFlow("f08", "B", "j2"),
        SequenceFlow("f09", "C", "j2"),
        SequenceFlow("f10", "j2", "D"),
        SequenceFlow("f11", "D", "j1"),
        SequenceFlow("f12", "j1", "T9"),
        SequenceFlow("f13", "T9", "end"),
    ]
    return _lane(nodes, flows)


def linear_model(task_count: int = 2) -> BpmnModel:
    nodes = [FlowNode("start", "startEvent")]
    flows = []
    prev = "start"
    for i in range(1, task_count + 1):
        nodes.append(FlowNode(f"T{i}", "task"))
        flows.append(SequenceFlow(f"f{i}", prev, f"T{i}"))
        prev = f"T{i}"
    nodes.append(FlowNode("end", "endEvent"))
    flows.append(SequenceFlow(f"f{task_count + 1}", prev, "end"))
    return _lane(nodes, flows)
