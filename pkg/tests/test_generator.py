"""Tests for the synthetic CPT generator and the bail fixture."""

import numpy as np
import pytest

from edgeflow.experiments.generator import (
    BAIL_ROOT_MARGINALS,
    ScoreTable,
    ThetaCombination,
    ThetaParams,
    bail_graph,
    bail_network,
    generate_cpts,
    neutral_scores,
    simplex_points,
    theta_grid,
)
from edgeflow.errors import InputError


@pytest.fixture
def dag():
    return bail_graph()


@pytest.fixture
def scores(dag):
    return ScoreTable.random(dag, np.random.default_rng(0))


class TestBailGraph:
    def test_shape(self, dag):
        assert len(dag.names) == 7
        assert len(dag.edges) == 11
        assert dag.sensitive == {"R", "G"}
        assert dag.domain_size(dag.names) == 288

    def test_labels(self, dag):
        assert dag.node("J").value_labels == ("Bail granted", "Bail rejected")
        assert dag.node("G").index_of("Others") == 2

    def test_root_marginals_are_positive_pmfs(self):
        for probs in BAIL_ROOT_MARGINALS.values():
            assert sum(probs) == pytest.approx(1.0)
            assert min(probs) > 0.0


class TestGenerateCpts:
    def test_rows_sum_to_one(self, dag):
        model = bail_network()
        for name in dag.names:
            assert np.allclose(model.table(name).sum(axis=-1), 1.0)
        assert model.strictly_positive

    def test_single_parent_strength_copies_scores(self, dag, scores):
        theta = ThetaParams.uniform(dag).with_node("T", {"A": 0.0, "G": 0.0, "R": 1.0})
        model = generate_cpts(dag, theta, scores, BAIL_ROOT_MARGINALS)
        table = model.table("T")
        for a in range(2):
            for g in range(3):
                for r in range(3):
                    assert table[a, g, r] == pytest.approx(scores.values[("R", "T")][r])

    def test_uniform_scores_give_uniform_rows(self, dag):
        uniform = ScoreTable({
            (p, c): np.full((dag.cardinality(p), dag.cardinality(c)), 1.0 / dag.cardinality(c))
            for p, c in dag.edges
        })
        model = generate_cpts(dag, ThetaParams.random(dag, np.random.default_rng(1)), uniform, BAIL_ROOT_MARGINALS)
        assert np.allclose(model.table("J"), 0.5)
        assert np.allclose(model.table("E"), 0.5)

    def test_weighted_sum(self, dag, scores):
        theta = ThetaParams.uniform(dag)
        model = generate_cpts(dag, theta, scores, BAIL_ROOT_MARGINALS)
        expected = sum(scores.values[(p, "E")][v] for p, v in zip(("A", "G", "R"), (1, 2, 0))) / 3.0
        assert model.table("E")[1, 2, 0] == pytest.approx(expected)

    def test_missing_theta(self, dag, scores):
        theta = ThetaParams({edge: v for edge, v in ThetaParams.uniform(dag).values.items() if edge != ("R", "J")})
        with pytest.raises(InputError, match="Missing theta"):
            generate_cpts(dag, theta, scores, BAIL_ROOT_MARGINALS)

    def test_theta_must_sum_to_one(self, dag, scores):
        theta = ThetaParams.uniform(dag).with_node("T", {"A": 0.5, "G": 0.5, "R": 0.5})
        with pytest.raises(InputError, match="sum to"):
            generate_cpts(dag, theta, scores, BAIL_ROOT_MARGINALS)

    def test_theta_out_of_range(self, dag, scores):
        theta = ThetaParams.uniform(dag).with_node("T", {"A": 1.5, "G": -0.5, "R": 0.0})
        with pytest.raises(InputError, match="outside"):
            generate_cpts(dag, theta, scores, BAIL_ROOT_MARGINALS)

    def test_bad_score_shape(self, dag, scores):
        values = dict(scores.values)
        values[("R", "J")] = np.full((2, 2), 0.5)
        with pytest.raises(InputError, match="shape"):
            generate_cpts(dag, ThetaParams.uniform(dag), ScoreTable(values), BAIL_ROOT_MARGINALS)

    def test_missing_root_marginal(self, dag, scores):
        marginals = {k: v for k, v in BAIL_ROOT_MARGINALS.items() if k != "C"}
        with pytest.raises(InputError, match="root node 'C'"):
            generate_cpts(dag, ThetaParams.uniform(dag), scores, marginals)


class TestScoreTable:
    def test_with_row_renormalizes(self, scores):
        updated = scores.with_row(("R", "J"), 0, (1.0, 3.0))
        assert updated.values[("R", "J")][0].tolist() == [0.25, 0.75]
        assert not np.array_equal(scores.values[("R", "J")][0], [0.25, 0.75])

    def test_with_row_rejects_negative(self, scores):
        with pytest.raises(InputError):
            scores.with_row(("R", "J"), 0, (-1.0, 2.0))

    def test_neutral_scores(self, dag, scores):
        neutral = neutral_scores(dag, scores, "J")
        for parent in dag.parents("J"):
            assert np.allclose(neutral.values[(parent, "J")], 0.5)
        assert np.array_equal(neutral.values[("R", "T")], scores.values[("R", "T")])

    def test_random_is_seeded(self, dag):
        first = ScoreTable.random(dag, np.random.default_rng(3))
        second = ScoreTable.random(dag, np.random.default_rng(3))
        assert all(np.array_equal(first.values[e], second.values[e]) for e in dag.edges)

    def test_concentration_must_be_positive(self, dag):
        with pytest.raises(InputError):
            ScoreTable.random(dag, np.random.default_rng(0), concentration=0.0)
        with pytest.raises(InputError):
            ThetaParams.random(dag, np.random.default_rng(0), concentration=-1.0)

    def test_concentrated_strengths_are_valid(self, dag):
        theta = ThetaParams.random(dag, np.random.default_rng(5), concentration=50.0)
        theta.validate(dag)
        for name in ("E", "T", "J"):
            weights = theta.for_node(dag, name)
            assert sum(weights.values()) == pytest.approx(1.0)
            assert min(weights.values()) > 0.02


class TestThetaGrid:
    def test_size(self, dag):
        assert len(theta_grid(dag)) == 625

    def test_points_are_valid(self, dag):
        for combo in theta_grid(dag):
            assert sum(combo.theta_j.values()) == pytest.approx(1.0)
            assert sum(combo.theta_t.values()) == pytest.approx(1.0)
            combo.apply(ThetaParams.uniform(dag)).validate(dag)

    def test_levels(self, dag):
        grid = theta_grid(dag)
        assert sorted({round(c.theta_j["R"], 12) for c in grid}) == [0.1, 0.2, 0.33, 0.45, 0.6]
        assert any(abs(c.theta_t["R"] - 1 / 3) < 1e-15 for c in grid)

    def test_contains_equal_strengths(self, dag):
        equal = [
            c for c in theta_grid(dag)
            if np.allclose(list(c.theta_j.values()), 0.2) and np.allclose(list(c.theta_t.values()), 1 / 3)
        ]
        assert len(equal) == 1

    def test_parent_order(self, dag):
        combo = theta_grid(dag)[0]
        assert tuple(combo.theta_j) == dag.parents("J")
        assert tuple(combo.theta_t) == dag.parents("T")
        assert combo.combo_id == 0

    def test_apply(self, dag):
        combo = ThetaCombination(combo_id=7, theta_j={"C": 0.2, "G": 0.2, "R": 0.2, "E": 0.2, "T": 0.2},
                                 theta_t={"A": 0.5, "G": 0.25, "R": 0.25})
        theta = combo.apply(ThetaParams.uniform(dag))
        assert theta.for_node(dag, "T") == {"A": 0.5, "G": 0.25, "R": 0.25}

    def test_profile_mismatch(self):
        with pytest.raises(InputError):
            simplex_points(("A", "B", "C"), "A", (0.5,), ((1.0,),))
