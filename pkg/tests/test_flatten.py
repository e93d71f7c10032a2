from __future__ import annotations

import random
from collections import Counter

import builders
from flowledger.bpmn import to_flow_graph
from flowledger.compiler import (
    build_hsm,
    compile_model,
    detect_regions,
    flatten_hsm,
    task_leaves,
)
from oracles import gen_model, hsm_traces, network_traces


def _pipeline(model):
    graph = to_flow_graph(model)
    regions = detect_regions(graph)
    hsm = build_hsm(graph, regions)
    return hsm, flatten_hsm(hsm)


def test_harvester_machines_and_channels(harvester_model):
    hsm, network = _pipeline(harvester_model)
    assert [m.id for m in network.machines] == ["m:Seller", "m:split:0", "m:split:1"]
    channel_set = {(c.emitter, c.event, c.receiver) for c in network.channels}
    assert channel_set == {
        ("m:Seller", "fork:split:0", "m:split:0"),
        ("m:Seller", "fork:split:1", "m:split:1"),
        ("m:split:0", "done:split:0", "m:Seller"),
        ("m:split:1", "done:split:1", "m:Seller"),
    }


def test_no_concurrent_single_machine():
    _, network = _pipeline(builders.linear_model(3))
    assert len(network.machines) == 1
    assert network.channels == ()


def test_nested_concurrent_machine_count():
    _, network = _pipeline(builders.nested_parallel_model())
    # 1 root + 2 outer branches + 2 inner branches
    assert len(network.machines) == 5
    roots = [m for m in network.machines if m.id == "m:L"]
    assert len(roots) == 1


def test_every_machine_deterministic(harvester_model, collab_model):
    for model in (harvester_model, collab_model, builders.xor_model()):
        _, network = _pipeline(model)
        for machine in network.machines:
            groups = Counter((t.source, t.trigger) for t in machine.transitions)
            for (source, trigger), n in groups.items():
                if n == 1:
                    continue
                group = [t for t in machine.transitions
                         if (t.source, t.trigger) == (source, trigger)]
                assert all(t.guard is not None or t.is_default for t in group)
                assert sum(t.is_default for t in group) <= 1


def test_channels_single_emitter_consumed(collab_model):
    _, network = _pipeline(collab_model)
    emitters: dict[str, set[str]] = {}
    for c in network.channels:
        emitters.setdefault(c.event, set()).add(c.emitter)
    assert all(len(e) == 1 for e in emitters.values())
    msg_events = [c.event for c in network.channels if c.event.startswith("msg:")]
    assert len(set(msg_events)) == 11


def test_leaf_preservation():
    rng = random.Random(21)
    for _ in range(30):
        model = gen_model(rng)
        hsm, network = _pipeline(model)
        hsm_tasks = Counter(
            t for _, root in hsm.lanes for t in task_leaves(root))
        # every task leaf survives as exactly one at:<task> machine state,
        # and every transition into it carries the request action
        net_tasks = Counter()
        for machine in network.machines:
            for state in machine.states:
                if state.startswith("at:") and state[3:] in hsm_tasks:
                    net_tasks[state[3:]] += 1
            for t in machine.transitions:
                if t.target.startswith("at:") and t.target[3:] in hsm_tasks:
                    assert f"request:{t.target[3:]}" in t.actions
        assert hsm_tasks == net_tasks


def test_trace_equivalence_examples(harvester_model):
    hsm, network = _pipeline(harvester_model)
    direct = hsm_traces(hsm.lane_root("Seller"))
    flattened = network_traces(network)
    assert direct == flattened
    assert ("RecAgr", "GetTrReq", "GetIns", "GetTransp", "DoTransp", "RecAndFin") in direct
    assert ("RecAgr", "GetTrReq", "GetTransp", "GetIns", "DoTransp", "RecAndFin") in direct
    assert len(direct) == 2


def test_trace_equivalence_nested():
    hsm, network = _pipeline(builders.nested_parallel_model())
    assert hsm_traces(hsm.lane_root("L")) == network_traces(network)


def test_emit_is_pure(harvester_model):
    a = compile_model(harvester_model)
    b = compile_model(harvester_model)
    assert a.program_id == b.program_id
    assert a.to_bytes() == b.to_bytes()


def test_rename_changes_program_id(harvester_model):
    from dataclasses import replace

    pool = harvester_model.pools[0]
    lane = pool.lanes[0]
    renamed_nodes = tuple(
        replace(n, name="RecordAgreement") if n.id == "RecAgr" else n
        for n in lane.nodes)
    renamed = replace(
        harvester_model,
        pools=(replace(pool, lanes=(replace(lane, nodes=renamed_nodes),)),))
    assert compile_model(renamed).program_id != compile_model(harvester_model).program_id


def test_harvester_dataflow(harvester_program):
    flow = harvester_program.dataflow["DoTransp"]
    assert set(flow.inputs) == {"Insurance", "Transport"}
    assert set(flow.outputs) == {"Delivery"}
    assert flow.lane == "Seller"


def test_program_save_load_round_trip(tmp_path, harvester_program):
    from flowledger.compiler import load_program, save_program

    path = tmp_path / "program.json"
    save_program(harvester_program, path)
    again = load_program(path)
    assert again == harvester_program
    assert again.program_id == harvester_program.program_id
    # file is exactly the canonical bytes the id is computed over
    assert path.read_bytes() == harvester_program.to_bytes()
