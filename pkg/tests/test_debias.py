"""Tests for the debiasing objective and discrimination removal."""

import numpy as np
import pytest

from edgeflow.config.schema import DebiasConfig
from edgeflow.core.debias import debias_objective, joint_from_models, remove_discrimination
from edgeflow.core.fit import fit_network
from edgeflow.core.unfairness import cumulative_unfairness_approx
from tests.networks import make_mixed


def _reference_objective(fitted, weights, utility_weight):
    unfair = 0.0
    for name, model in fitted.models.items():
        w = weights.get(name, model.weights())
        offset = 0 if model.fair_weight is None else 1
        unfair += float(np.sum(w[offset:]))
    original = fitted.model.joint_table().table
    approx = fitted.approximation(weights).joint_table().table
    return unfair + utility_weight * float(np.sum((original - approx) ** 2))


class TestObjective:
    def test_tiny(self, tiny):
        fitted = fit_network(tiny)
        # P = [0.48, 0.12, 0.16, 0.24], Q = [0.576, 0.024, 0.04, 0.36]
        assert debias_objective(fitted) == pytest.approx(1.0 + 0.047232)
        assert debias_objective(fitted, utility_weight=0.0) == pytest.approx(1.0)

    def test_matches_reference(self, bail_fitted):
        rng = np.random.default_rng(2)
        for utility_weight in (0.0, 1.0, 50.0):
            weights = {name: rng.dirichlet(np.ones(3)) for name in ("E", "T", "J")}
            expected = _reference_objective(bail_fitted, weights, utility_weight)
            assert debias_objective(bail_fitted, weights, utility_weight) == pytest.approx(expected, rel=1e-10)

    def test_defaults_to_fitted_weights(self, bail_fitted):
        expected = _reference_objective(bail_fitted, {}, 1.0)
        assert debias_objective(bail_fitted) == pytest.approx(expected, rel=1e-10)


class TestRemoveDiscrimination:
    def test_tiny_has_nothing_to_move(self, tiny):
        result = remove_discrimination(tiny)
        assert result.unfairness_before == pytest.approx(1.0)
        assert result.unfairness_after == pytest.approx(1.0)
        assert result.joint.table.ravel() == pytest.approx([0.576, 0.024, 0.04, 0.36])

    def test_pure_fairness_removes_unfair_weights(self, bail, bail_fitted):
        result = remove_discrimination(bail, DebiasConfig(utility_weight=0.0), fitted=bail_fitted)
        assert result.unfairness_after == pytest.approx(0.0, abs=1e-9)
        for weight in result.edge_weights().values():
            assert weight == pytest.approx(0.0, abs=1e-9)
        for name in ("E", "T", "J"):
            assert result.models[name].fair_weight == pytest.approx(1.0, abs=1e-9)

    def test_default_trade_off(self, bail, bail_fitted):
        config = DebiasConfig(utility_weight=1.0)
        result = remove_discrimination(bail, config, fitted=bail_fitted)

        before = result.unfairness_before + result.distance_before
        after = result.unfairness_after + result.distance_after
        assert after <= before + 1e-12
        trace = np.array(result.objective_trace)
        assert np.all(np.diff(trace) <= 1e-15)
        assert trace[-1] <= trace[0]
        assert result.joint.total() == pytest.approx(1.0, abs=1e-9)
        assert set(result.edge_weights()) == set(bail.dag.unfair_edges)
        for model in result.models.values():
            assert model.weights().sum() == pytest.approx(1.0, abs=1e-8)
            assert np.all(model.weights() >= 0.0)

    def test_distance_bound(self, bail, bail_fitted):
        for utility_weight in (0.5, 5.0, 1e3):
            result = remove_discrimination(bail, DebiasConfig(utility_weight=utility_weight), fitted=bail_fitted)
            bound = result.distance_before + result.unfairness_before / utility_weight
            assert result.distance_after <= bound + 1e-12

    def test_restarts_keep_best(self, bail, bail_fitted):
        single = remove_discrimination(bail, DebiasConfig(), fitted=bail_fitted)
        several = remove_discrimination(bail, DebiasConfig(restarts=3, seed=1), fitted=bail_fitted)
        assert several.metadata["objective"] <= single.metadata["objective"] + 1e-12

    def test_summary(self, bail, bail_fitted):
        result = remove_discrimination(bail, fitted=bail_fitted)
        lines = result.summary()
        assert lines[0].startswith("unfairness:")
        assert any("R->J" in line for line in lines)

    def test_joint_from_fitted_models(self, bail_fitted):
        joint = joint_from_models(bail_fitted)
        assert joint.total() == pytest.approx(1.0, abs=1e-12)
        assert joint.nodes == bail_fitted.dag.names

    @pytest.mark.slow
    def test_random_networks(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            model = make_mixed(rng)
            utility_weight = float(rng.uniform(0.5, 20.0))
            result = remove_discrimination(model, DebiasConfig(utility_weight=utility_weight))
            before = result.unfairness_before + utility_weight * result.distance_before
            assert result.unfairness_after + utility_weight * result.distance_after <= before + 1e-12
            assert result.distance_after <= result.distance_before + result.unfairness_before / utility_weight + 1e-12
            assert np.all(np.diff(result.objective_trace) <= 1e-15)
            assert result.joint.total() == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.slow
    def test_biased_networks_become_fairer(self):
        rng = np.random.default_rng(29)
        checked = 0
        for _ in range(10):
            model = make_mixed(rng)
            fitted = fit_network(model)
            if sum(fitted.edge_weights().values()) < 1e-3:
                continue
            s, y = {"S": 0}, {"Y": 1}
            c_before = cumulative_unfairness_approx(fitted, s, y).value
            result = remove_discrimination(model, DebiasConfig(utility_weight=1.0), fitted=fitted)
            c_after = cumulative_unfairness_approx(fitted.with_models(result.models), s, y).value
            assert result.unfairness_after < result.unfairness_before
            assert abs(c_after) <= abs(c_before) + 1e-12
            if abs(c_before) > 1e-9:
                assert abs(c_after) < abs(c_before)
            assert result.joint.total() == pytest.approx(1.0, abs=1e-9)
            checked += 1
        assert checked >= 5
