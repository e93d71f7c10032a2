"""Directed-graph view of a validated model: one graph per lane plus
cross-lane message edges."""

from __future__ import annotations

from dataclasses import dataclass

from .model import BpmnModel, FlowNode, SequenceFlow, require_valid


@dataclass(frozen=True)
class LaneGraph:
    lane_id: str
    lane_name: str
    nodes: dict[str, FlowNode]
    edges: tuple[SequenceFlow, ...]

    def successors(self, node_id: str) -> list[SequenceFlow]:
        return [e for e in self.edges if e.source == node_id]

    def predecessors(self, node_id: str) -> list[SequenceFlow]:
        return [e for e in self.edges if e.target == node_id]

    def source(self) -> FlowNode:
        (start,) = [n for n in self.nodes.values() if n.kind == "startEvent"]
        return start

    def sinks(self) -> list[FlowNode]:
        return [n for n in self.nodes.values() if n.kind == "endEvent"]


@dataclass(frozen=True)
class MessageEdge:
    flow_id: str
    source: str
    target: str
    carries: str = ""    # data object name, optional


@dataclass(frozen=True)
class FlowGraph:
    lane_graphs: dict[str, LaneGraph]
    message_edges: tuple[MessageEdge, ...] = ()

    def node_count(self) -> int:
        return sum(len(g.nodes) for g in self.lane_graphs.values())

    def edge_count(self) -> int:
        return sum(len(g.edges) for g in self.lane_graphs.values())

    def lane_of(self, node_id: str) -> str:
        for lane_id, g in self.lane_graphs.items():
            if node_id in g.nodes:
                return lane_id
        raise KeyError(node_id)


def to_flow_graph(model: BpmnModel) -> FlowGraph:
    """Graph representation of a validated model; ids are preserved."""
    require_valid(model)
    data_names = {d.id: d.name for d in model.data_objects}
    lane_graphs = {}
    for _, lane in model.lanes():
        lane_graphs[lane.id] = LaneGraph(
            lane_id=lane.id,
            lane_name=lane.name,
            nodes={n.id: n for n in lane.nodes},
            edges=tuple(lane.flows),
        )
    message_edges = tuple(
        MessageEdge(
            flow_id=mf.id,
            source=mf.source_node,
            target=mf.target_node,
            carries=data_names.get(mf.carries, ""),
        )
        for mf in model.message_flows
    )
    return FlowGraph(lane_graphs=lane_graphs, message_edges=message_edges)
