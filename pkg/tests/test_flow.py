"""Tests for scaling factors, edge flows and per-node flow groups."""

import numpy as np
import pytest

from edgeflow.core.distribution import Cbn, Cpt
from edgeflow.core.flow import FlowCache, edge_flow, interventional_flow, node_flows, scaling_factor
from edgeflow.core.graph import CausalDag, NodeSpec
from edgeflow.errors import InputError, PositivityError
from tests.networks import binary
from tests.oracles import enumerated_path_specific, surgery_interventional


class TestScaling:
    def test_tiny_scaling_factor(self, tiny):
        # P(Y=0 | do(S=0)) / P(Y=0 | do(S=1)) = 0.8 / 0.4
        assert scaling_factor(tiny, ["S"], {"S": 0}, "Y", 0) == pytest.approx(2.0)
        assert scaling_factor(tiny, ["S"], {"S": 1}, "Y", 1) == pytest.approx(3.0)

    def test_table_matches_pointwise_factor(self, med):
        table = edge_flow(med, ["M"], "Y")
        for m in range(2):
            for y in range(2):
                expected = scaling_factor(med, ["M"], {"M": m}, "Y", y)
                assert table.scaling[m, y] == pytest.approx(expected, rel=1e-12)

    def test_group_must_be_parents(self, med):
        with pytest.raises(InputError):
            scaling_factor(med, ["Y"], {"Y": 0}, "M", 0)

    def test_empty_group(self, med):
        with pytest.raises(InputError):
            edge_flow(med, [], "Y")


class TestEdgeFlow:
    def test_tiny_values(self, tiny):
        table = edge_flow(tiny, ["S"], "Y")
        assert table.flow[0] == pytest.approx([0.96, 0.04])
        assert table.flow[1] == pytest.approx([0.1, 0.9])
        assert table.value({"S": 1}, 1) == pytest.approx(0.9)
        assert table.label == "S->Y"
        assert table.scaled

    def test_unscaled_flow_is_interventional(self, bail):
        table = interventional_flow(bail, ["R"], "J")
        assert not table.scaled
        assert np.all(table.scaling == 1.0)
        for r in range(3):
            expected = bail.interventional_distribution({"R": r}, "J")
            assert table.flow[r] == pytest.approx(expected, abs=1e-12)

    def test_rows_sum_to_one(self, bail):
        for name in bail.dag.names:
            if not bail.dag.parents(name):
                continue
            for table in node_flows(bail, name).columns():
                assert np.allclose(table.flow.sum(axis=-1), 1.0, atol=1e-9)
                assert np.all(table.scaling >= 0.0)
                assert table.strictly_positive

    def test_zero_interventional_probability(self):
        dag = CausalDag(binary("S", "Y"), [("S", "Y")], ["S"])
        model = Cbn(dag, [Cpt("S", (), [0.6, 0.4]), Cpt("Y", ("S",), [[1.0, 0.0], [0.4, 0.6]])])
        with pytest.raises(PositivityError, match=r"P\(Y=1 \| do\(S=0\)\)"):
            edge_flow(model, ["S"], "Y")

    def test_zero_probability_allowed_without_scaling(self):
        dag = CausalDag(binary("S", "Y"), [("S", "Y")], ["S"])
        model = Cbn(dag, [Cpt("S", (), [0.6, 0.4]), Cpt("Y", ("S",), [[1.0, 0.0], [0.4, 0.6]])])
        table = edge_flow(model, ["S"], "Y", use_scaling=False)
        assert table.flow[0].tolist() == [1.0, 0.0]

    def test_expand_onto_parent_layout(self, bail):
        table = edge_flow(bail, ["R"], "J")
        parents = bail.dag.parents("J")
        shape = bail.dag.cardinalities(parents + ("J",))
        expanded = table.expand(parents, shape)
        assert expanded.shape == (2, 3, 3, 2, 2, 2)
        assert expanded[1, 2, 0, 1, 0] == pytest.approx(table.flow[0])

    def test_expand_rejects_foreign_group(self, tiny):
        table = edge_flow(tiny, ["S"], "Y")
        with pytest.raises(InputError):
            table.expand(("A",), (2, 2))


class TestNodeFlows:
    def test_bail_groups(self, bail):
        flows = node_flows(bail, "J")
        assert flows.fair_group == ("C", "E", "T")
        assert flows.unfair_parents == ("G", "R")
        assert [table.group for table in flows.columns()] == [("C", "E", "T"), ("G",), ("R",)]
        assert flows.shape == (2, 3, 3, 2, 2, 2)

    def test_only_unfair_parents(self, tiny):
        flows = node_flows(tiny, "Y")
        assert flows.fair is None
        assert flows.fair_group == ()
        assert flows.unfair_parents == ("S",)

    def test_only_fair_parents(self, kite):
        flows = node_flows(kite, "Y")
        assert flows.fair_group == ("W", "Z")
        assert flows.unfair == {}

    def test_root_has_no_flows(self, tiny):
        with pytest.raises(InputError):
            node_flows(tiny, "S")

    def test_cache(self, med):
        cache = FlowCache(med)
        first = cache.get("Y")
        assert cache.get("Y") is first
        assert len(cache) == 1
        assert cache.get("Y", use_scaling=False) is not first
        assert len(cache) == 2


def _mediator_ignored() -> Cbn:
    dag = CausalDag(binary("S", "M", "Y"), [("S", "M"), ("M", "Y"), ("S", "Y")], ["S"])
    return Cbn(dag, [
        Cpt("S", (), [0.3, 0.7]),
        Cpt("M", ("S",), [[0.7, 0.3], [0.2, 0.8]]),
        Cpt("Y", ("S", "M"), [[[0.9, 0.1], [0.9, 0.1]],
                              [[0.5, 0.5], [0.5, 0.5]]]),
    ])


class TestFlowProperties:
    @pytest.mark.parametrize("node, path", [("S", ("S", "Y")), ("M", ("M", "Y"))])
    def test_med_scaling_matches_two_world_enumeration(self, med, node, path):
        pi = [med.dag.path(*path)]
        for value in range(2):
            alt = 1 - value
            for y in range(2):
                numerator = enumerated_path_specific(med, pi, {node: value}, {node: alt}, {"Y": y})
                denominator = surgery_interventional(med, {node: alt}, {"Y": y})
                actual = scaling_factor(med, [node], {node: value}, "Y", y)
                assert actual == pytest.approx(numerator / denominator, abs=1e-12)

    def test_ignored_mediator_has_unit_scaling(self):
        model = _mediator_ignored()
        for m in range(2):
            for y in range(2):
                assert scaling_factor(model, ["M"], {"M": m}, "Y", y) == pytest.approx(1.0, abs=1e-12)

    def test_ignored_mediator_flow_is_marginal(self):
        model = _mediator_ignored()
        table = edge_flow(model, ["M"], "Y")
        marginal = [model.query({"Y": 0}), model.query({"Y": 1})]
        assert marginal[1] == pytest.approx(0.38)
        assert np.allclose(table.scaling, 1.0, atol=1e-12)
        for m in range(2):
            assert table.flow[m] == pytest.approx(marginal, abs=1e-12)

    @pytest.mark.parametrize("group", [["S"], ["M"]])
    def test_relabelled_child_permutes_flow_columns(self, med, group):
        nodes = [NodeSpec("S", 2), NodeSpec("M", 2), NodeSpec("Y", 2, ("1", "0"))]
        dag = CausalDag(nodes, med.dag.edges, ["S"])
        flipped = Cbn.from_tables(dag, {
            "S": med.table("S"),
            "M": med.table("M"),
            "Y": np.ascontiguousarray(med.table("Y")[..., ::-1]),
        })
        original = edge_flow(med, group, "Y")
        relabelled = edge_flow(flipped, group, "Y")
        assert np.allclose(relabelled.flow, original.flow[..., ::-1], atol=1e-12)
        assert np.allclose(relabelled.scaling, original.scaling[..., ::-1], atol=1e-12)
