"""BPMN subset: parsing, validation, guards, flow-graph extraction."""

from .graph import FlowGraph, LaneGraph, MessageEdge, to_flow_graph
from .guards import (
    Bin,
    Cmp,
    GuardExpr,
    Lit,
    Not,
    Path,
    eval_guard,
    parse_guard,
    print_guard,
)
from .model import (
    BpmnModel,
    DataObject,
    Diagnostic,
    FlowNode,
    Lane,
    MessageFlow,
    Pool,
    SequenceFlow,
    model_from_dict,
    model_to_dict,
    model_to_json,
    require_valid,
    validate_model,
)
from .parser import parse_bpmn

__all__ = [
    "BpmnModel", "Pool", "Lane", "FlowNode", "SequenceFlow", "DataObject",
    "MessageFlow", "Diagnostic",
    "parse_bpmn", "validate_model", "require_valid",
    "model_to_dict", "model_to_json", "model_from_dict",
    "parse_guard", "print_guard", "eval_guard",
    "GuardExpr", "Lit", "Path", "Cmp", "Not", "Bin",
    "FlowGraph", "LaneGraph", "MessageEdge", "to_flow_graph",
]
