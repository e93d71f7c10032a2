from __future__ import annotations

import random

import pytest

import builders
from flowledger.bpmn import to_flow_graph
from flowledger.errors import InvalidModel
from oracles import gen_model


def test_harvester_graph_counts(harvester_model):
    g = to_flow_graph(harvester_model)
    assert list(g.lane_graphs) == ["Seller"]
    assert g.node_count() == 10
    assert g.edge_count() == 10
    assert len(g.message_edges) == 0


def test_collab_graph_lanes_and_messages(collab_model):
    g = to_flow_graph(collab_model)
    assert sorted(g.lane_graphs) == ["Buyer", "InsComp", "ReqRegistry",
                                     "SalesDep", "ShipDep", "Transp"]
    assert len(g.message_edges) == len(collab_model.message_flows) == 11
    carried = {e.flow_id: e.carries for e in g.message_edges}
    assert carried["mf_ins"] == "Insurance"
    assert carried["mf_offer"] == "PurchaseOffer"
    # message edges preserve node ids across lanes
    assert g.lane_of("SendOffer") == "Buyer"
    assert g.lane_of("RecvOffer") == "SalesDep"


def test_minimal_graph():
    g = to_flow_graph(builders.minimal_model())
    assert g.node_count() == 2
    assert g.edge_count() == 1


def test_invalid_model_rejected():
    with pytest.raises(InvalidModel):
        to_flow_graph(builders.unbalanced_parallel_model())


def test_counts_match_model_exactly():
    rng = random.Random(13)
    for _ in range(40):
        model = gen_model(rng)
        g = to_flow_graph(model)
        assert g.node_count() == model.node_count()
        assert g.edge_count() == model.flow_count()
        assert set(g.lane_graphs["L"].nodes) == {n.id for _, n in model.nodes()}
