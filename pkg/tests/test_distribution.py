"""
Tests for CPTs, the inference engine, effect measures, sampling and
maximum-likelihood estimation.
"""

import itertools

import numpy as np
import pandas as pd
import pytest

from edgeflow.core.distribution import (
    Cbn,
    Cpt,
    PathIntervention,
    SampleSet,
    mle_estimate,
    path_specific_effect,
    sample,
    total_effect,
)
from edgeflow.core.graph import CausalDag
from edgeflow.errors import InputError, PositivityError, RecantingWitnessError, ZeroProbabilityError
from edgeflow.experiments.generator import bail_graph
from tests.networks import binary, random_cbn, random_cpts
from tests.oracles import enumerated_path_specific, surgery_interventional


class TestCpt:
    def test_table_is_read_only(self, tiny):
        with pytest.raises(ValueError):
            tiny.cpts["Y"].table[0, 0] = 0.5

    def test_row_lookup(self, med):
        assert med.cpts["Y"].prob(1, {"S": 1, "M": 0}) == pytest.approx(0.5)

    def test_wrong_axes(self):
        with pytest.raises(InputError):
            Cpt("Y", ("S",), [0.5, 0.5])

    def test_negative_entry(self):
        with pytest.raises(InputError):
            Cpt("S", (), [1.2, -0.2])

    def test_row_not_normalized(self):
        with pytest.raises(InputError, match="sums to"):
            Cpt("Y", ("S",), [[0.5, 0.5], [0.5, 0.4]])

    def test_root_not_normalized(self):
        with pytest.raises(InputError, match=r"S\|\(0,\) sums to 1.1"):
            Cpt("S", (), [0.6, 0.5])

    def test_missing_cpt(self):
        dag = CausalDag(binary("S", "Y"), [("S", "Y")])
        with pytest.raises(InputError):
            Cbn(dag, [Cpt("S", (), [0.5, 0.5])])

    def test_parent_order_must_be_canonical(self):
        dag = CausalDag(binary("A", "B", "Y"), [("A", "Y"), ("B", "Y")])
        with pytest.raises(InputError):
            Cbn(dag, [
                Cpt("A", (), [0.5, 0.5]),
                Cpt("B", (), [0.5, 0.5]),
                Cpt("Y", ("B", "A"), np.full((2, 2, 2), 0.5)),
            ])

    def test_equality(self, tiny):
        copy = Cbn.from_tables(tiny.dag, {name: tiny.table(name) for name in tiny.dag.names})
        assert copy == tiny


class TestPositivity:
    def test_positive(self, tiny):
        assert tiny.strictly_positive
        tiny.require_positive()

    def test_zero_cell_named(self):
        dag = CausalDag(binary("S", "Y"), [("S", "Y")], ["S"])
        model = Cbn(dag, [Cpt("S", (), [0.6, 0.4]), Cpt("Y", ("S",), [[1.0, 0.0], [0.4, 0.6]])])
        with pytest.raises(PositivityError, match=r"P\(Y=1 \| S=0\)") as excinfo:
            model.require_positive()
        assert excinfo.value.cell == "Y=1 | S=0"


class TestObservationalQueries:
    def test_marginal(self, tiny):
        assert tiny.marginal({"Y": 1}) == pytest.approx(0.36)

    def test_conditional(self, tiny):
        assert tiny.query({"S": 1}, {"Y": 1}) == pytest.approx(0.24 / 0.36)

    def test_contradicting_query(self, tiny):
        assert tiny.query({"S": 1}, {"S": 0}) == 0.0

    def test_zero_probability_condition(self):
        dag = CausalDag(binary("S", "Y"), [("S", "Y")])
        model = Cbn(dag, [Cpt("S", (), [1.0, 0.0]), Cpt("Y", ("S",), [[0.5, 0.5], [0.5, 0.5]])])
        with pytest.raises(ZeroProbabilityError):
            model.query({"Y": 1}, {"S": 1})

    def test_joint_prob(self, med):
        assert med.joint_prob({"S": 1, "M": 1, "Y": 0}) == pytest.approx(0.7 * 0.8 * 0.25)

    def test_joint_table(self, bail):
        joint = bail.joint_table()
        assert joint.table.shape == (2, 2, 3, 3, 2, 2, 2)
        assert joint.total() == pytest.approx(1.0, abs=1e-12)
        assert joint.total_variation(joint) == 0.0


class TestInterventions:
    def test_mediation(self, med):
        assert med.interventional({"S": 1}, {"Y": 1}) == pytest.approx(0.7)
        assert med.interventional({"S": 0}, {"Y": 1}) == pytest.approx(0.19)
        assert total_effect(med, {"Y": 1}, {"S": 1}, {"S": 0}) == pytest.approx(0.51)

    def test_intervened_target_is_indicator(self, med):
        assert med.interventional({"S": 1}, {"S": 0, "Y": 1}) == 0.0
        assert med.interventional({"S": 1}, {"S": 1, "Y": 1}) == pytest.approx(0.7)

    def test_distribution_sums_to_one(self, bail):
        dist = bail.interventional_distribution({"R": 2, "G": 1}, "J")
        assert dist.sum() == pytest.approx(1.0, abs=1e-12)

    def test_target_cannot_be_intervened(self, tiny):
        with pytest.raises(InputError):
            tiny.interventional_distribution({"S": 0}, "S")

    def test_pair_must_match(self, tiny):
        with pytest.raises(InputError):
            total_effect(tiny, {"Y": 1}, {"S": 1}, {})

    def test_matches_graph_surgery(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            model = random_cbn(rng, int(rng.integers(2, 6)), edge_prob=0.6)
            dag = model.dag
            for size in (1, 2):
                for do_nodes in itertools.combinations(dag.names, size):
                    do = {name: int(rng.integers(dag.cardinality(name))) for name in do_nodes}
                    for target in dag.names:
                        if target in do:
                            continue
                        dist = model.interventional_distribution(do, target)
                        for value in range(dag.cardinality(target)):
                            expected = surgery_interventional(model, do, {target: value})
                            assert model.interventional(do, {target: value}) == pytest.approx(expected, abs=1e-12)
                            assert dist[value] == pytest.approx(expected, abs=1e-12)

    def test_joint_query_matches_surgery(self):
        rng = np.random.default_rng(5)
        model = random_cbn(rng, 5, edge_prob=0.7)
        do = {"N1": 1}
        y = {"N2": 0, "N4": 1}
        assert model.interventional(do, y) == pytest.approx(surgery_interventional(model, do, y), abs=1e-12)

    @pytest.mark.parametrize("edges, do_node, target", [
        ([("A", "B"), ("B", "C")], "C", "A"),
        ([("A", "B"), ("B", "C")], "B", "A"),
        ([("A", "C"), ("B", "C")], "A", "B"),
        ([("A", "C"), ("B", "C")], "C", "B"),
    ])
    def test_non_ancestor_intervention_leaves_marginal(self, edges, do_node, target):
        dag = CausalDag(binary("A", "B", "C"), edges)
        model = random_cpts(dag, np.random.default_rng(13))
        for do_value in range(2):
            for value in range(2):
                observed = model.query({target: value})
                assert model.interventional({do_node: do_value}, {target: value}) == pytest.approx(observed, abs=1e-12)


class TestPathSpecific:
    def test_mediation_indirect(self, med):
        pi = {med.dag.path("S", "M", "Y")}
        value = med.path_specific(PathIntervention(pi, {"S": 1}, {"S": 0}), {"Y": 1})
        assert value == pytest.approx(0.34)

    def test_mediation_direct(self, med):
        pi = {med.dag.path("S", "Y")}
        dist = med.path_specific_distribution(PathIntervention(pi, {"S": 1}, {"S": 0}), "Y")
        assert dist[1] == pytest.approx(0.575)
        assert dist.sum() == pytest.approx(1.0)

    def test_all_paths_equals_intervention(self, med):
        pi = med.dag.directed_paths("S", "Y")
        value = med.path_specific(PathIntervention(pi, {"S": 1}, {"S": 0}), {"Y": 1})
        assert value == pytest.approx(med.interventional({"S": 1}, {"Y": 1}))

    def test_no_paths_equals_baseline(self, med):
        value = med.path_specific(PathIntervention(frozenset(), {"S": 1}, {"S": 0}), {"Y": 1})
        assert value == pytest.approx(0.19)

    def test_recanting_witness_rejected(self, kite):
        pi = {kite.dag.path("S", "W", "Y")}
        with pytest.raises(RecantingWitnessError) as excinfo:
            kite.path_specific(PathIntervention(pi, {"S": 1}, {"S": 0}), {"Y": 1})
        assert excinfo.value.witness == "W"

    def test_tiny_effect(self, tiny):
        pi = {tiny.dag.path("S", "Y")}
        assert path_specific_effect(tiny, pi, {"Y": 1}, {"S": 1}, {"S": 0}) == pytest.approx(3.0)

    def test_effect_needs_positive_baseline(self):
        dag = CausalDag(binary("S", "Y"), [("S", "Y")], ["S"])
        model = Cbn(dag, [Cpt("S", (), [0.5, 0.5]), Cpt("Y", ("S",), [[1.0, 0.0], [0.5, 0.5]])])
        with pytest.raises(PositivityError):
            path_specific_effect(model, {dag.path("S", "Y")}, {"Y": 1}, {"S": 1}, {"S": 0})

    def test_mismatched_intervention(self):
        with pytest.raises(InputError):
            PathIntervention(frozenset(), {"S": 1}, {"T": 0})

    def test_matches_two_world_enumeration(self):
        rng = np.random.default_rng(17)
        compared = 0
        for _ in range(25):
            model = random_cbn(rng, int(rng.integers(3, 6)), edge_prob=0.7)
            dag = model.dag
            target = dag.names[-1]
            paths = sorted(dag.directed_paths("N0", target), key=str)
            on = {"N0": dag.cardinality("N0") - 1}
            off = {"N0": 0}
            for size in range(len(paths) + 1):
                for chosen in itertools.combinations(paths, size):
                    if not dag.recanting_witness({"N0"}, target, chosen).identifiable:
                        continue
                    intervention = PathIntervention(frozenset(chosen), on, off)
                    for value in range(dag.cardinality(target)):
                        expected = enumerated_path_specific(model, chosen, on, off, {target: value})
                        actual = model.path_specific(intervention, {target: value})
                        assert actual == pytest.approx(expected, abs=1e-12)
                        compared += 1
        assert compared > 0


class TestSampling:
    def test_deterministic(self, bail):
        first = sample(bail, 500, seed=9)
        second = sample(bail, 500, seed=9)
        assert np.array_equal(first.values, second.values)
        assert first.nodes == bail.dag.names
        assert len(first) == 500

    def test_frequencies(self, tiny):
        samples = sample(tiny, 20000, seed=1)
        assert samples.column("S").mean() == pytest.approx(0.4, abs=0.02)
        assert samples.column("Y").mean() == pytest.approx(0.36, abs=0.02)

    @pytest.mark.parametrize("n", [-1, 0])
    def test_size_must_be_positive(self, tiny, n):
        with pytest.raises(InputError, match="at least 1"):
            sample(tiny, n)

    def test_mle_recovers_cpts(self, med):
        estimate = mle_estimate(med.dag, sample(med, 40000, seed=3))
        for name in med.dag.names:
            assert np.allclose(estimate.table(name), med.table(name), atol=0.03)

    def test_mle_distance_shrinks_with_data(self, bail):
        truth = bail.joint_table()
        distances = []
        for m in (100, 1000, 10000):
            runs = [truth.total_variation(mle_estimate(bail.dag, sample(bail, m, seed=seed)).joint_table())
                    for seed in range(3)]
            distances.append(float(np.mean(runs)))
        assert distances[0] > distances[1] > distances[2]

    def test_unseen_rows_fall_back_to_uniform(self):
        dag = CausalDag(binary("S", "Y"), [("S", "Y")])
        samples = SampleSet(nodes=("S", "Y"), values=np.array([[0, 0], [0, 1], [0, 1]]))
        estimate = mle_estimate(dag, samples)
        assert estimate.cpts["Y"].fallback_rows == ((1,),)
        assert estimate.table("Y")[1].tolist() == [0.5, 0.5]
        assert estimate.table("Y")[0] == pytest.approx([1 / 3, 2 / 3])

    def test_smoothing(self):
        dag = CausalDag(binary("S", "Y"), [("S", "Y")])
        samples = SampleSet(nodes=("S", "Y"), values=np.array([[0, 0], [0, 1], [0, 1]]))
        estimate = mle_estimate(dag, samples, smoothing=1.0)
        assert estimate.cpts["Y"].fallback_rows == ()
        assert estimate.table("Y")[0] == pytest.approx([2 / 5, 3 / 5])
        assert estimate.table("S") == pytest.approx([4 / 5, 1 / 5])

    def test_out_of_range_samples(self):
        dag = CausalDag(binary("S"), [])
        with pytest.raises(InputError):
            mle_estimate(dag, SampleSet(nodes=("S",), values=np.array([[2]])))

    def test_frame_round_trip(self, bail):
        dag = bail_graph()
        samples = sample(bail, 50, seed=4)
        frame = samples.to_frame(dag)
        assert set(frame["R"]) <= {"African American", "Hispanic", "White"}
        restored = SampleSet.from_frame(dag, frame)
        assert np.array_equal(restored.values, samples.values)

    def test_frame_unknown_label(self, tiny):
        frame = pd.DataFrame({"S": ["0", "1"], "Y": ["0", "maybe"]})
        with pytest.raises(InputError, match="unknown values"):
            SampleSet.from_frame(tiny.dag, frame)

    def test_frame_missing_column(self, tiny):
        with pytest.raises(InputError, match="missing columns"):
            SampleSet.from_frame(tiny.dag, pd.DataFrame({"S": ["0"]}))
