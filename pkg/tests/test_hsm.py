from __future__ import annotations

import random

import builders
from flowledger.bpmn import to_flow_graph
from flowledger.compiler import build_hsm, detect_regions, task_leaves
from flowledger.compiler.hsm import Atomic, Concurrent, Sequence


def _hsm_for(model):
    graph = to_flow_graph(model)
    return build_hsm(graph, detect_regions(graph))


def _kinds(seq: Sequence) -> list[str]:
    out = []
    for child in seq.children:
        if isinstance(child, Atomic):
            out.append(f"{child.node.kind}:{child.node.id}")
        elif isinstance(child, Concurrent):
            out.append(f"concurrent:{child.split_id}")
        else:
            out.append("sequence")
    return out


def test_harvester_structure(harvester_model):
    hsm = _hsm_for(harvester_model)
    root = hsm.lane_root("Seller")
    assert _kinds(root) == [
        "startEvent:start", "task:RecAgr", "task:GetTrReq",
        "concurrent:split", "task:DoTransp", "task:RecAndFin", "endEvent:end",
    ]
    conc = root.children[3]
    assert [task_leaves(b) for b in conc.branches] == [["GetIns"], ["GetTransp"]]
    assert conc.join_id == "join"
    # linear edges only: one unguarded edge out of every position
    assert all(e.guard is None for e in root.edges)


def test_linear_chain_no_concurrent():
    hsm = _hsm_for(builders.linear_model(3))
    root = hsm.lane_root("L")
    assert not any(isinstance(c, Concurrent) for c in root.children)
    assert task_leaves(root) == ["T1", "T2", "T3"]


def test_xor_variant_guarded_branches():
    hsm = _hsm_for(builders.xor_model())
    root = hsm.lane_root("Seller")
    assert not any(isinstance(c, Concurrent) for c in root.children)
    guards = [e.guard for e in root.edges if e.guard is not None]
    assert len(guards) == 1          # accept guard; reject arm is the default
    defaults = [e for e in root.edges if e.is_default]
    assert len(defaults) == 1
    assert sorted(task_leaves(root)) == ["GetTrReq", "RecAgr"]


def test_nested_parallel_machine_shape():
    hsm = _hsm_for(builders.nested_parallel_model())
    root = hsm.lane_root("L")
    outer = [c for c in root.children if isinstance(c, Concurrent)]
    assert len(outer) == 1
    inner = [
        c for branch in outer[0].branches for c in branch.children
        if isinstance(c, Concurrent)
    ]
    assert len(inner) == 1
    assert sorted(task_leaves(root)) == ["A", "B", "C", "D", "T0", "T9"]


def test_leaves_cover_all_non_gateway_nodes():
    from oracles import gen_model

    rng = random.Random(5)
    for _ in range(30):
        model = gen_model(rng)
        hsm = _hsm_for(model)
        root = hsm.lane_root("L")

        def all_leaf_ids(state):
            if isinstance(state, Atomic):
                return [state.node.id]
            if isinstance(state, Sequence):
                return [i for c in state.children for i in all_leaf_ids(c)]
            if isinstance(state, Concurrent):
                return [i for b in state.branches for i in all_leaf_ids(b)]
            raise TypeError

        leaf_ids = sorted(all_leaf_ids(root))
        expected = sorted(n.id for _, n in model.nodes()
                          if n.kind not in ("parallelGateway", "exclusiveGateway"))
        assert leaf_ids == expected
