"""Discrete-event execution of a flat machine network.

One totally ordered event queue per instance: events are dequeued in
(seq, name) order and offered to every machine in id order; a machine
fires at most one transition per event, chosen deterministically by
guard valuation. An event nobody can consume yet (an eager cross-lane
message racing ahead of its catcher) parks in a deferred buffer and is
re-enqueued as soon as some machine enters a state that can take it, so
messages are never lost.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

from ..bpmn.guards import DataContext, GuardExpr, eval_guard, parse_guard
from ..compiler.flatten import FsmNetwork, FsmTransition
from ..errors import GuardFault, MissingField, TypeMismatch


@dataclass(frozen=True)
class DeEvent:
    seq: int
    name: str
    payload: dict
    origin: str | None = None    # machine that emitted it, None for external

    def key(self) -> tuple[int, str]:
        return (self.seq, self.name)


class EventQueue:
    """Priority queue over (seq, name); seq is assigned at enqueue time."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, str, DeEvent]] = []
        self._next_seq = 0

    def push(self, name: str, payload: dict | None = None,
             origin: str | None = None) -> DeEvent:
        event = DeEvent(seq=self._next_seq, name=name,
                        payload=payload or {}, origin=origin)
        self._next_seq += 1
        heapq.heappush(self._heap, (event.seq, event.name, event))
        return event

    def pop(self) -> DeEvent:
        return heapq.heappop(self._heap)[2]

    def __len__(self) -> int:
        return len(self._heap)

    def snapshot(self) -> list[DeEvent]:
        return [item[2] for item in sorted(self._heap)]

    def discard(self, predicate: Callable[[DeEvent], bool]) -> list[DeEvent]:
        """Remove all queued events matching the predicate; returns them."""
        kept, dropped = [], []
        for item in self._heap:
            (dropped if predicate(item[2]) else kept).append(item)
        heapq.heapify(kept)
        self._heap = kept
        return [item[2] for item in sorted(dropped)]


ActionHandler = Callable[[str, DeEvent], None]


class NetworkRuntime:
    def __init__(self, network: FsmNetwork):
        self.network = network
        self.machine_ids = sorted(m.id for m in network.machines)
        self.states: dict[str, str] = {m.id: m.initial for m in network.machines}
        self.accepting: dict[str, frozenset[str]] = {
            m.id: frozenset(m.accepting) for m in network.machines
        }
        self.queue = EventQueue()
        self.deferred: dict[str, list[dict]] = {}
        # (machine, state) -> trigger -> transitions
        self._index: dict[tuple[str, str], dict[str, list[FsmTransition]]] = {}
        for m in network.machines:
            for t in m.transitions:
                self._index.setdefault((m.id, t.source), {}) \
                    .setdefault(t.trigger, []).append(t)
        self._guard_cache: dict[str, GuardExpr] = {}

    # -- queries ---------------------------------------------------------------

    def all_accepting(self) -> bool:
        return all(self.states[mid] in self.accepting[mid] for mid in self.machine_ids)

    def machine_states(self) -> dict[str, str]:
        return dict(self.states)

    def triggers_at(self, machine_id: str, state: str) -> list[str]:
        return sorted(self._index.get((machine_id, state), {}))

    # -- stepping ----------------------------------------------------------------

    def enqueue(self, name: str, payload: dict | None = None,
                origin: str | None = None) -> DeEvent:
        return self.queue.push(name, payload, origin)

    def step(self, ctx: DataContext, on_action: ActionHandler
             ) -> tuple[DeEvent, list[tuple[str, FsmTransition]]]:
        """Process the least queued event; fires every enabled transition."""
        event = self.queue.pop()
        fired: list[tuple[str, FsmTransition]] = []
        for mid in self.machine_ids:
            group = self._index.get((mid, self.states[mid]), {}).get(event.name)
            if not group:
                continue
            chosen = self._select(mid, group, ctx)
            for action in chosen.actions:
                on_action(action, event)
            self.states[mid] = chosen.target
            fired.append((mid, chosen))
            self._release_deferred(mid)
        if not fired:
            self.deferred.setdefault(event.name, []).append(event.payload)
        return event, fired

    def _select(self, mid: str, group: list[FsmTransition],
                ctx: DataContext) -> FsmTransition:
        if len(group) == 1 and group[0].guard is None and not group[0].is_default:
            return group[0]
        holding = []
        for t in group:
            if t.guard is None:
                continue
            expr = self._guard_cache.get(t.guard)
            if expr is None:
                expr = parse_guard(t.guard)
                self._guard_cache[t.guard] = expr
            try:
                if eval_guard(expr, ctx):
                    holding.append(t)
            except (MissingField, TypeMismatch) as exc:
                raise GuardFault(f"guard {t.guard!r} on {mid}: {exc}") from exc
        if len(holding) == 1:
            return holding[0]
        if len(holding) > 1:
            raise GuardFault(
                f"{len(holding)} guards hold simultaneously at {mid}:{group[0].source}")
        defaults = [t for t in group if t.is_default]
        if len(defaults) == 1:
            return defaults[0]
        raise GuardFault(
            f"no guard holds and no default flow at {mid}:{group[0].source}")

    def _release_deferred(self, mid: str) -> None:
        if not self.deferred:
            return
        for trigger in self.triggers_at(mid, self.states[mid]):
            buffered = self.deferred.get(trigger)
            if buffered:
                payload = buffered.pop(0)
                if not buffered:
                    del self.deferred[trigger]
                self.enqueue(trigger, payload)

    def discard_deferred(self, predicate: Callable[[str], bool]) -> list[str]:
        dropped = [name for name in self.deferred if predicate(name)]
        for name in dropped:
            del self.deferred[name]
        return sorted(dropped)


def event_subject(name: str) -> tuple[str, str] | None:
    """(kind, id) the event refers to: a node id, or a lane for start events."""
    parts = name.split(":")
    if parts[0] == "task_done":
        return ("node", parts[1])
    if parts[0] == "msg":
        return ("node", parts[2])
    if parts[0] in ("fork", "done"):
        return ("node", parts[1])
    if parts[0] == "start":
        return ("lane", parts[1])
    return None
