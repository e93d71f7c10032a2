"""Trade-transaction scopes: one top scope per lane plus one nested scope
per region that is a real multi-step unit of work (at least two tasks
touching at least two data objects). Scope boundaries are region (SESE)
boundaries, so nesting mirrors the region tree by construction."""

from __future__ import annotations

from dataclasses import dataclass

from ..bpmn.model import TASK, BpmnModel
from .regions import RegionTree

MIN_SCOPE_TASKS = 2
MIN_SCOPE_DATA_OBJECTS = 2


@dataclass(frozen=True)
class TransactionScope:
    id: str
    lane: str
    kind: str                       # "top" | "nested"
    entry_edge: str | None
    exit_edge: str | None
    nodes: tuple[str, ...]          # sorted node ids inside the scope's region
    participating_lanes: tuple[str, ...]


def identify_scopes(
    regions: dict[str, RegionTree], model: BpmnModel
) -> list[TransactionScope]:
    node_kind = {n.id: n.kind for _, n in model.nodes()}
    data_names = {d.id: d.name for d in model.data_objects}
    touched_by_task = {
        n.id: {data_names[r] for r in (*n.data_inputs, *n.data_outputs)}
        for _, n in model.nodes()
    }

    scopes: list[TransactionScope] = []
    for lane_id in sorted(regions):
        tree = regions[lane_id]
        scopes.append(TransactionScope(
            id=f"scope:{lane_id}:top",
            lane=lane_id,
            kind="top",
            entry_edge=None,
            exit_edge=None,
            nodes=tuple(sorted(tree.root.nodes)),
            participating_lanes=(lane_id,),
        ))
        for region in tree.proper_regions():
            tasks = [n for n in region.nodes if node_kind.get(n) == TASK]
            touched = set().union(*(touched_by_task[t] for t in tasks)) if tasks else set()
            if len(tasks) >= MIN_SCOPE_TASKS and len(touched) >= MIN_SCOPE_DATA_OBJECTS:
                scopes.append(TransactionScope(
                    id=f"scope:{lane_id}:{region.entry_edge}",
                    lane=lane_id,
                    kind="nested",
                    entry_edge=region.entry_edge,
                    exit_edge=region.exit_edge,
                    nodes=tuple(sorted(region.nodes)),
                    participating_lanes=(lane_id,),
                ))
    return sorted(scopes, key=lambda s: s.id)
