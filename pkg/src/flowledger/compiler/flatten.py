"""Flattening a DE-HSM into an interconnected network of flat state machines.

Per lane one root machine; every Concurrent state dissolves into fork
events (one per branch machine), a family of join-wait states in the
parent that count received branch-done events, and a done event per
branch. Start events and message throws fold into transition actions, so
every transition in the network is driven by a queued event:

    start:<lane>                lane activation (enqueued at instance start)
    task_done:<taskId>          external task completion
    msg:<flowId>:<targetNode>   cross-lane message delivery
    fork:<splitId>:<i>          branch activation
    done:<splitId>:<i>          branch completion

Action strings on transitions: ``emit:<event>``, ``request:<taskId>``,
``open:<scopeId>``, ``commit:<scopeId>``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

from ..bpmn.guards import Bin, GuardExpr, print_guard
from ..bpmn.model import END_EVENT, MESSAGE_CATCH, MESSAGE_THROW, START_EVENT, TASK
from .hsm import ENTRY, EXIT, Atomic, Concurrent, DeHsm, Sequence
from .scopes import TransactionScope


@dataclass(frozen=True)
class FsmTransition:
    source: str
    trigger: str
    guard: str | None           # printed guard text, parsed back at run time
    is_default: bool
    actions: tuple[str, ...]
    target: str


@dataclass(frozen=True)
class DeFsm:
    id: str
    lane: str
    initial: str
    states: tuple[str, ...]
    accepting: tuple[str, ...]
    transitions: tuple[FsmTransition, ...]


@dataclass(frozen=True)
class Channel:
    emitter: str
    event: str
    receiver: str


@dataclass(frozen=True)
class FsmNetwork:
    machines: tuple[DeFsm, ...]
    channels: tuple[Channel, ...]

    def machine(self, machine_id: str) -> DeFsm:
        for m in self.machines:
            if m.id == machine_id:
                return m
        raise KeyError(machine_id)


@dataclass
class _Pending:
    """A transition waiting for its target: source state + trigger plus the
    guard/default/action baggage accumulated across folded pass-throughs."""

    state: str
    trigger: str
    guard: GuardExpr | None = None
    is_default: bool = False
    actions: tuple[str, ...] = ()

    def through(self, guard: GuardExpr | None, is_default: bool) -> "_Pending":
        combined = self.guard if guard is None else (
            guard if self.guard is None else Bin("and", self.guard, guard))
        return _Pending(self.state, self.trigger, combined,
                        self.is_default or is_default, self.actions)

    def with_actions(self, extra: Iterable[str]) -> "_Pending":
        return replace(self, actions=self.actions + tuple(extra))


class _MachineBuilder:
    def __init__(self, machine_id: str, lane: str, initial: str):
        self.id = machine_id
        self.lane = lane
        self.initial = initial
        self.states: set[str] = {initial}
        self.accepting: set[str] = set()
        self.transitions: list[FsmTransition] = []

    def state(self, name: str, accepting: bool = False) -> str:
        self.states.add(name)
        if accepting:
            self.accepting.add(name)
        return name

    def link(self, pendings: Iterable[_Pending], target: str,
             entry_actions: Iterable[str] = ()) -> None:
        for p in pendings:
            self.transitions.append(FsmTransition(
                source=p.state,
                trigger=p.trigger,
                guard=None if p.guard is None else print_guard(p.guard),
                is_default=p.is_default,
                actions=p.actions + tuple(entry_actions),
                target=target,
            ))

    def build(self) -> DeFsm:
        return DeFsm(
            id=self.id,
            lane=self.lane,
            initial=self.initial,
            states=tuple(sorted(self.states)),
            accepting=tuple(sorted(self.accepting)),
            transitions=tuple(sorted(
                self.transitions,
                key=lambda t: (t.source, t.trigger, t.guard or "", t.is_default, t.target),
            )),
        )


class _Flattener:
    def __init__(self, hsm: DeHsm, scopes: tuple[TransactionScope, ...]):
        self.hsm = hsm
        self.msgs_from: dict[str, list] = {}
        self.msg_into: dict[str, list] = {}
        for me in hsm.message_edges:
            self.msgs_from.setdefault(me.source, []).append(me)
            self.msg_into.setdefault(me.target, []).append(me)
        self.scope_by_entry = {
            s.entry_edge: s.id for s in scopes if s.kind == "nested"
        }
        self.top_scope: dict[str, str] = {
            s.lane: s.id for s in scopes if s.kind == "top"
        }
        self.machines: list[_MachineBuilder] = []

    def run(self) -> FsmNetwork:
        for lane_id, root in self.hsm.lanes:
            mb = _MachineBuilder(f"m:{lane_id}", lane_id, "idle")
            self.machines.append(mb)
            start = _Pending("idle", f"start:{lane_id}")
            top = self.top_scope.get(lane_id)
            if top:
                start = start.with_actions([f"open:{top}"])
            exits = self.wire_seq(root, mb, lane_id, [start])
            assert not exits, f"lane {lane_id} root sequence leaked exits"
        machines = tuple(sorted((mb.build() for mb in self.machines), key=lambda m: m.id))
        return FsmNetwork(machines=machines, channels=_channels(machines))

    # -- sequence wiring --------------------------------------------------

    def wire_seq(self, seq: Sequence, mb: _MachineBuilder, lane: str,
                 inbound: list[_Pending]) -> list[_Pending]:
        scope = self.scope_by_entry.get(seq.region_entry) if seq.region_entry else None
        if scope:
            inbound = [p.with_actions([f"open:{scope}"]) for p in inbound]

        entry_items: dict[int, list[_Pending]] = {}
        seq_exits: list[_Pending] = []

        def follow(src: int, pendings: list[_Pending]) -> None:
            for edge in seq.edges:
                if edge.src != src:
                    continue
                moved = [p.through(edge.guard, edge.is_default) for p in pendings]
                if edge.dst == EXIT:
                    seq_exits.extend(moved)
                else:
                    entry_items.setdefault(edge.dst, []).extend(moved)

        follow(ENTRY, inbound)
        for idx, child in enumerate(seq.children):
            items = entry_items.get(idx, [])
            if not items:
                continue
            child_exits = self.wire_child(child, mb, lane, items)
            follow(idx, child_exits)

        if scope:
            seq_exits = [p.with_actions([f"commit:{scope}"]) for p in seq_exits]
        return seq_exits

    def wire_child(self, child, mb: _MachineBuilder, lane: str,
                   items: list[_Pending]) -> list[_Pending]:
        if isinstance(child, Atomic):
            return self.wire_atomic(child, mb, lane, items)
        if isinstance(child, Sequence):
            return self.wire_seq(child, mb, lane, items)
        if isinstance(child, Concurrent):
            return self.wire_concurrent(child, mb, lane, items)
        raise TypeError(str(type(child)))

    def wire_atomic(self, child: Atomic, mb: _MachineBuilder, lane: str,
                    items: list[_Pending]) -> list[_Pending]:
        node = child.node
        emits = tuple(
            f"emit:msg:{me.flow_id}:{me.target}" for me in self.msgs_from.get(node.id, ())
        )

        if node.kind == START_EVENT:
            return items   # folded into the lane-start transition

        if node.kind == MESSAGE_THROW:
            return [p.with_actions(emits) for p in items]

        if node.kind == END_EVENT:
            state = mb.state(f"at:{node.id}", accepting=True)
            top = self.top_scope.get(lane)
            mb.link(items, state, entry_actions=[f"commit:{top}"] if top else [])
            return []

        if node.kind == MESSAGE_CATCH:
            state = mb.state(f"at:{node.id}")
            mb.link(items, state)
            (incoming,) = self.msg_into[node.id]
            out = _Pending(state, f"msg:{incoming.flow_id}:{node.id}")
            return [out.with_actions(emits)]

        if node.kind == TASK:
            at_state = mb.state(f"at:{node.id}")
            incoming = self.msg_into.get(node.id)
            if incoming:
                (me,) = incoming
                wait = mb.state(f"wait:{node.id}")
                mb.link(items, wait)
                mb.link([_Pending(wait, f"msg:{me.flow_id}:{node.id}")], at_state,
                        entry_actions=[f"request:{node.id}"])
            else:
                mb.link(items, at_state, entry_actions=[f"request:{node.id}"])
            out = _Pending(at_state, f"task_done:{node.id}")
            return [out.with_actions(emits)]

        raise TypeError(f"unexpected leaf kind {node.kind!r}")

    def wire_concurrent(self, child: Concurrent, mb: _MachineBuilder, lane: str,
                        items: list[_Pending]) -> list[_Pending]:
        split = child.split_id
        count = len(child.branches)
        scope = self.scope_by_entry.get(child.region_entry)

        fork_actions = [f"emit:fork:{split}:{i}" for i in range(count)]
        if scope:
            fork_actions = [f"open:{scope}"] + fork_actions

        def join_state(received: frozenset[int]) -> str:
            label = ".".join(str(i) for i in sorted(received)) or "-"
            return mb.state(f"join:{split}:{label}")

        mb.link(items, join_state(frozenset()), entry_actions=fork_actions)

        full = frozenset(range(count))
        exits: list[_Pending] = []
        for size in range(count):
            for received in _subsets(count, size):
                state = join_state(received)
                for i in sorted(full - received):
                    after = received | {i}
                    pending = _Pending(state, f"done:{split}:{i}")
                    if after == full:
                        if scope:
                            pending = pending.with_actions([f"commit:{scope}"])
                        exits.append(pending)
                    else:
                        mb.link([pending], join_state(after))

        for i, branch in enumerate(child.branches):
            bmb = _MachineBuilder(f"m:{split}:{i}", lane, "idle")
            self.machines.append(bmb)
            bmb.accepting.add("idle")
            branch_exits = self.wire_seq(
                branch, bmb, lane, [_Pending("idle", f"fork:{split}:{i}")])
            done = bmb.state("done", accepting=True)
            bmb.link([p.with_actions([f"emit:done:{split}:{i}"]) for p in branch_exits], done)
        return exits


def _subsets(count: int, size: int):
    from itertools import combinations

    for combo in combinations(range(count), size):
        yield frozenset(combo)


def _channels(machines: tuple[DeFsm, ...]) -> tuple[Channel, ...]:
    emitter_of: dict[str, str] = {}
    for m in machines:
        for t in m.transitions:
            for action in t.actions:
                if action.startswith("emit:"):
                    event = action[len("emit:"):]
                    prior = emitter_of.get(event)
                    assert prior is None or prior == m.id, \
                        f"event {event!r} emitted by {prior!r} and {m.id!r}"
                    emitter_of[event] = m.id
    channels = set()
    for m in machines:
        for t in m.transitions:
            if t.trigger in emitter_of:
                channels.add(Channel(emitter_of[t.trigger], t.trigger, m.id))
    for event, emitter in emitter_of.items():
        assert any(c.event == event for c in channels), \
            f"event {event!r} emitted by {emitter!r} but never consumed"
    return tuple(sorted(channels, key=lambda c: (c.emitter, c.event, c.receiver)))


def flatten_hsm(hsm: DeHsm, scopes: tuple[TransactionScope, ...] = ()) -> FsmNetwork:
    """Flatten the hierarchy into communicating machines (one root per lane)."""
    return _Flattener(hsm, tuple(scopes)).run()
