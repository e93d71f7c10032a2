from __future__ import annotations

import builders
from flowledger.bpmn import to_flow_graph
from flowledger.compiler import detect_regions, identify_scopes


def _scopes_for(model):
    graph = to_flow_graph(model)
    return identify_scopes(detect_regions(graph), model)


def test_harvester_scopes(harvester_model):
    scopes = _scopes_for(harvester_model)
    by_kind = {s.kind: s for s in scopes}
    assert len(scopes) == 2
    assert by_kind["top"].id == "scope:Seller:top"
    nested = by_kind["nested"]
    # the concurrent region: 2 tasks touching TrRequirements, Insurance, Transport
    assert nested.id == "scope:Seller:f3"
    assert {"GetIns", "GetTransp"} <= set(nested.nodes)
    assert nested.participating_lanes == ("Seller",)


def test_single_task_lane_top_only():
    scopes = _scopes_for(builders.linear_model(1))
    assert [s.kind for s in scopes] == ["top"]


def test_two_task_linear_lane_top_only():
    # tasks without a shared region never qualify as a nested scope
    scopes = _scopes_for(builders.linear_model(2))
    assert [s.kind for s in scopes] == ["top"]


def test_collab_scopes(collab_model):
    scopes = _scopes_for(collab_model)
    tops = [s for s in scopes if s.kind == "top"]
    nested = [s for s in scopes if s.kind == "nested"]
    assert len(tops) == 6
    assert [s.lane for s in nested] == ["ShipDep"]
    assert {"VerifyIns", "VerifyTransp"} <= set(nested[0].nodes)


def test_scope_nesting_is_tree(harvester_model, collab_model):
    for model in (harvester_model, collab_model, builders.nested_parallel_model()):
        scopes = _scopes_for(model)
        sets = [frozenset(s.nodes) for s in scopes]
        for a in sets:
            for b in sets:
                assert a <= b or b <= a or not (a & b), "partial overlap"
