"""Hierarchical state-machine construction from a lane's flow graph.

Every non-gateway flow node becomes an Atomic leaf. Parallel split/join
regions become Concurrent states with one branch per split successor;
exclusive gateways dissolve into guarded edges between the children of
their enclosing Sequence (a rejoining choice nests as a child Sequence so
its region boundary stays addressable). Gateways themselves never appear
as leaves.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..bpmn.graph import FlowGraph, LaneGraph, MessageEdge
from ..bpmn.guards import GuardExpr
from ..bpmn.model import (
    END_EVENT,
    EXCLUSIVE_GATEWAY,
    PARALLEL_GATEWAY,
    FlowNode,
)
from ..errors import Irreducible
from .regions import Region, RegionTree

ENTRY = -1
EXIT = -2


@dataclass(frozen=True)
class Atomic:
    node: FlowNode


@dataclass(frozen=True)
class SeqEdge:
    src: int            # child index, or ENTRY
    dst: int            # child index, or EXIT
    guard: GuardExpr | None = None
    is_default: bool = False


@dataclass(frozen=True)
class Sequence:
    children: tuple["HsmState", ...]
    edges: tuple[SeqEdge, ...]
    region_entry: str | None = None    # entry edge id of the region this covers


@dataclass(frozen=True)
class Concurrent:
    branches: tuple[Sequence, ...]
    split_id: str
    join_id: str
    region_entry: str


HsmState = object   # Atomic | Sequence | Concurrent


@dataclass(frozen=True)
class DeHsm:
    lanes: tuple[tuple[str, Sequence], ...]    # (lane id, root) sorted by lane
    message_edges: tuple[MessageEdge, ...]

    def lane_root(self, lane_id: str) -> Sequence:
        for lid, root in self.lanes:
            if lid == lane_id:
                return root
        raise KeyError(lane_id)


def task_leaves(state: HsmState) -> list[str]:
    """Multiset of task ids reachable in an HSM state (ordered)."""
    if isinstance(state, Atomic):
        return [state.node.id] if state.node.kind == "task" else []
    if isinstance(state, Sequence):
        return [t for c in state.children for t in task_leaves(c)]
    if isinstance(state, Concurrent):
        return [t for b in state.branches for t in task_leaves(b)]
    raise TypeError(str(type(state)))


def build_hsm(graph: FlowGraph, regions: dict[str, RegionTree]) -> DeHsm:
    lanes = []
    for lane_id in sorted(graph.lane_graphs):
        g = graph.lane_graphs[lane_id]
        tree = regions[lane_id]
        builder = _LaneBuilder(g, tree)
        lanes.append((lane_id, builder.build()))
    return DeHsm(lanes=tuple(lanes), message_edges=graph.message_edges)


class _LaneBuilder:
    def __init__(self, g: LaneGraph, tree: RegionTree):
        self.g = g
        self.region_by_entry_target: dict[str, Region] = {}
        edge_by_id = {e.id: e for e in g.edges}
        for region in tree.proper_regions():
            entry = edge_by_id.get(region.entry_edge or "")
            if entry is not None:
                self.region_by_entry_target[entry.target] = region
        self.edge_by_id = edge_by_id
        self.visited: set[str] = set()

    def build(self) -> Sequence:
        return self._walk(self.g.source().id, stop=None, region_entry=None)

    def _walk(self, start: str, stop: str | None, region_entry: str | None) -> Sequence:
        children: list[HsmState] = []
        edges: list[SeqEdge] = []
        prev = ENTRY
        cursor: str | None = start

        def attach(child: HsmState, guard=None, default=False) -> int:
            children.append(child)
            idx = len(children) - 1
            edges.append(SeqEdge(prev, idx, guard, default))
            return idx

        while cursor is not None and cursor != stop:
            if cursor in self.visited:
                raise Irreducible(
                    f"node {cursor!r} is reachable along two unmerged paths; "
                    "unstructured branching is not supported")
            self.visited.add(cursor)
            node = self.g.nodes[cursor]
            outs = self.g.successors(cursor)

            if node.kind == PARALLEL_GATEWAY and len(outs) >= 2:
                region = self.region_by_entry_target.get(cursor)
                if region is None or region.exit_edge is None:
                    raise Irreducible(f"parallel split {cursor!r} has no region")
                join = self.edge_by_id[region.exit_edge].source
                self.visited.add(join)
                branches = tuple(
                    self._walk(f.target, stop=join, region_entry=None) for f in outs
                )
                prev = attach(Concurrent(
                    branches=branches, split_id=cursor, join_id=join,
                    region_entry=region.entry_edge,
                ))
                (after_join,) = self.g.successors(join)
                cursor = after_join.target
                continue

            if node.kind == EXCLUSIVE_GATEWAY and len(outs) >= 2:
                region = self.region_by_entry_target.get(cursor)
                if region is not None and region.exit_edge is not None:
                    merge = self.edge_by_id[region.exit_edge].source
                    self.visited.add(merge)
                    sub_children: list[HsmState] = []
                    sub_edges: list[SeqEdge] = []
                    for f in outs:
                        if f.target == merge:
                            sub_edges.append(SeqEdge(ENTRY, EXIT, f.guard, f.is_default))
                            continue
                        branch = self._walk(f.target, stop=merge, region_entry=None)
                        sub_children.append(branch)
                        idx = len(sub_children) - 1
                        sub_edges.append(SeqEdge(ENTRY, idx, f.guard, f.is_default))
                        sub_edges.append(SeqEdge(idx, EXIT))
                    prev = attach(Sequence(
                        children=tuple(sub_children), edges=tuple(sub_edges),
                        region_entry=region.entry_edge,
                    ))
                    (after_merge,) = self.g.successors(merge)
                    cursor = after_merge.target
                    continue
                # open choice: branches run to their own ends (or to `stop`)
                for f in outs:
                    if f.target == stop:
                        edges.append(SeqEdge(prev, EXIT, f.guard, f.is_default))
                        continue
                    branch = self._walk(f.target, stop=stop, region_entry=None)
                    children.append(branch)
                    idx = len(children) - 1
                    edges.append(SeqEdge(prev, idx, f.guard, f.is_default))
                    edges.append(SeqEdge(idx, EXIT))
                cursor = None
                continue

            if node.kind == EXCLUSIVE_GATEWAY:
                # pass-through merge reached linearly (single successor)
                (out,) = outs
                cursor = out.target
                continue

            prev = attach(Atomic(node))
            if node.kind == END_EVENT or not outs:
                edges.append(SeqEdge(prev, EXIT))
                cursor = None
            else:
                (out,) = outs
                cursor = out.target

        if cursor == stop and stop is not None:
            edges.append(SeqEdge(prev, EXIT))
        return Sequence(children=tuple(children), edges=tuple(edges),
                        region_entry=region_entry)
