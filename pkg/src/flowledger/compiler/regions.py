"""Canonical single-entry single-exit (SESE) region detection per lane.

An edge pair (entry, exit) bounds a SESE region when the entry edge
dominates the exit edge and the exit edge postdominates the entry edge:
every path from the lane start into the enclosed nodes crosses the entry
edge, and every path from the enclosed nodes to a sink crosses the exit
edge. Lane graphs are acyclic (loops are outside the supported subset),
so edge dominance alone characterizes the property.

Dominance is computed on the edge-split graph (each edge becomes a
vertex), and the surviving pairs are canonicalized program-structure-tree
style: a pair is kept only if no other SESE pair with the same entry or
the same exit bounds a strictly smaller region. Regions with fewer than
two contained nodes are structurally trivial (a lone node on a chain) and
are dropped; what remains are the branching structures: one region per
parallel split/join pair and per rejoining exclusive choice.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..bpmn.graph import FlowGraph, LaneGraph
from ..bpmn.model import PARALLEL_GATEWAY
from ..errors import Irreducible

_EXIT = "\x00exit"


@dataclass(frozen=True)
class Region:
    """A SESE region; the root region spans the whole lane (entry/exit None)."""

    entry_edge: str | None
    exit_edge: str | None
    nodes: frozenset[str]
    children: tuple["Region", ...] = ()

    @property
    def is_root(self) -> bool:
        return self.entry_edge is None

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class RegionTree:
    lane_id: str
    root: Region

    def proper_regions(self) -> list[Region]:
        return [r for r in self.root.walk() if not r.is_root]


def detect_regions(graph: FlowGraph) -> dict[str, RegionTree]:
    """Program structure tree of canonical SESE regions for every lane."""
    return {lane_id: _lane_regions(g) for lane_id, g in sorted(graph.lane_graphs.items())}


def _lane_regions(g: LaneGraph) -> RegionTree:
    start = g.source().id
    sinks = [n.id for n in g.sinks()]
    edge_ids = [e.id for e in g.edges]
    all_nodes = frozenset(g.nodes)

    succ = _split_graph(g, sinks)
    dom = _dominators(succ, start)
    pdom = _dominators(_reverse(succ), _EXIT)

    pairs: dict[tuple[str, str], frozenset[str]] = {}
    for e1 in edge_ids:
        for e2 in edge_ids:
            if e1 == e2:
                continue
            if e1 in dom[e2] and e2 in pdom[e1]:
                contained = frozenset(
                    v for v in all_nodes if e1 in dom[v] and e2 in pdom[v]
                )
                pairs[(e1, e2)] = contained

    canonical = {}
    for (e1, e2), nodes in pairs.items():
        smaller_same_entry = any(
            o_nodes < nodes for (o1, _), o_nodes in pairs.items() if o1 == e1
        )
        smaller_same_exit = any(
            o_nodes < nodes for (_, o2), o_nodes in pairs.items() if o2 == e2
        )
        if not smaller_same_entry and not smaller_same_exit and len(nodes) >= 2:
            canonical[(e1, e2)] = nodes

    _require_parallel_regions(g, canonical)

    root = _build_tree(all_nodes, canonical)
    return RegionTree(lane_id=g.lane_id, root=root)


def _split_graph(g: LaneGraph, sinks: list[str]) -> dict[str, list[str]]:
    """Vertices are nodes plus edges; edge e=(a,b) becomes a -> e -> b."""
    succ: dict[str, list[str]] = {nid: [] for nid in g.nodes}
    succ[_EXIT] = []
    for e in g.edges:
        succ[e.source].append(e.id)
        succ[e.id] = [e.target]
    for sink in sinks:
        succ[sink].append(_EXIT)
    return succ


def _reverse(succ: dict[str, list[str]]) -> dict[str, list[str]]:
    rev: dict[str, list[str]] = {v: [] for v in succ}
    for v, outs in succ.items():
        for o in outs:
            rev[o].append(v)
    return rev


def _dominators(succ: dict[str, list[str]], root: str) -> dict[str, set[str]]:
    """Iterative set-based dominators; lane graphs are small."""
    pred = _reverse(succ)
    vertices = list(succ)
    dom = {v: set(vertices) for v in vertices}
    dom[root] = {root}
    changed = True
    while changed:
        changed = False
        for v in vertices:
            if v == root:
                continue
            preds = pred[v]
            if preds:
                new = set.intersection(*(dom[p] for p in preds)) | {v}
            else:
                new = {v}   # unreachable from root; dominated by itself only
            if new != dom[v]:
                dom[v] = new
                changed = True
    return dom


def _require_parallel_regions(g: LaneGraph, canonical) -> None:
    by_entry = {}
    for (e1, e2), nodes in canonical.items():
        by_entry.setdefault(e1, []).append(((e1, e2), nodes))
    for node in g.nodes.values():
        if node.kind != PARALLEL_GATEWAY or len(g.successors(node.id)) < 2:
            continue
        incoming = g.predecessors(node.id)
        entry = incoming[0].id if incoming else None
        match = next(
            ((key, nodes) for key, nodes in by_entry.get(entry or "", [])
             if node.id in nodes),
            None,
        )
        if match is None:
            raise Irreducible(
                f"parallel split {node.id!r} does not bound a SESE region")
        (_, exit_edge), region_nodes = match
        join = next(e.source for e in g.edges if e.id == exit_edge)
        _require_disjoint_branches(g, node.id, join, region_nodes)


def _require_disjoint_branches(g: LaneGraph, split: str, join: str,
                               region_nodes: frozenset[str]) -> None:
    """Branches of a parallel split may not reach into each other (gotos)."""
    reach_sets = []
    for out in g.successors(split):
        seen: set[str] = set()
        stack = [out.target]
        while stack:
            cur = stack.pop()
            if cur in seen or cur == join or cur not in region_nodes:
                continue
            seen.add(cur)
            stack.extend(e.target for e in g.successors(cur))
        reach_sets.append(seen)
    for i, a in enumerate(reach_sets):
        for b in reach_sets[i + 1:]:
            if a & b:
                raise Irreducible(
                    f"branches of parallel split {split!r} share nodes "
                    f"{sorted(a & b)}; gotos across branches are not supported")


def _build_tree(all_nodes: frozenset[str], canonical) -> Region:
    # smallest first so each region attaches to its tightest enclosing parent
    entries = sorted(canonical.items(), key=lambda kv: (len(kv[1]), kv[0][0]))
    placed: list[tuple[tuple[str, str], frozenset, list]] = []
    for (e1, e2), nodes in entries:
        placed.append(((e1, e2), nodes, []))

    roots: list[tuple] = []
    for i, (key, nodes, children) in enumerate(placed):
        parent = None
        for j in range(i + 1, len(placed)):
            _, p_nodes, p_children = placed[j]
            if nodes < p_nodes:
                parent = p_children
                break
        (parent if parent is not None else roots).append((key, nodes, children))

    def materialize(item) -> Region:
        (e1, e2), nodes, children = item
        kids = tuple(sorted(
            (materialize(c) for c in children),
            key=lambda r: r.entry_edge or "",
        ))
        return Region(entry_edge=e1, exit_edge=e2, nodes=nodes, children=kids)

    top_children = tuple(sorted(
        (materialize(item) for item in roots),
        key=lambda r: r.entry_edge or "",
    ))
    return Region(entry_edge=None, exit_edge=None, nodes=all_nodes, children=top_children)
