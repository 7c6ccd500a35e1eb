"""
Edge unfairness, cumulative unfairness and prioritization.

Edge unfairness measures how much of a CPT is carried by the flow of one
unfair edge: the change of the approximated CPT when that flow is removed,
relative to the flow, averaged over all CPT cells. Under the linear model
this is the edge's weight.

Cumulative unfairness is the average total effect of a sensitive value on
a decision against every alternative sensitive value. Its sensitivity to an
edge weight, and the resulting potential, rank edges for intervention.
"""

from typing import Dict, List, Mapping, Optional

import numpy as np
import structlog

from edgeflow.config.schema import FitConfig, PriorityConfig
from edgeflow.core.distribution import Cbn, Factorization
from edgeflow.core.fit import FittedNetwork, approx_cpt, fit_network
from edgeflow.core.flow import NodeFlows
from edgeflow.core.graph import Edge, edge_name
from edgeflow.core.result import CumulativeUnfairness, EdgeUnfairnessReport, LinearCptModel, PriorityEntry
from edgeflow.errors import DegenerateDomainError, InputError, PositivityError

logger = structlog.get_logger(__name__)

ZERO_TOLERANCE = 1e-12


def edge_unfairness(model: LinearCptModel, flows: NodeFlows, edge: Edge, method: str = "general") -> float:
    """
    Unfairness of the unfair edge ``K -> X``.

    Args:
        model: Linear model of X
        flows: Flows the model was fitted on
        edge: ``(K, X)`` with K an unfair parent of X
        method: ``"general"`` evaluates the removal of the flow cell by cell;
            ``"linear"`` returns the weight directly

    Raises:
        InputError: If the edge is not an unfair edge of the model
        PositivityError: If the edge flow has a zero cell (general method)
    """
    K, X = edge
    if model.child != X or K not in model.unfair_weights:
        raise InputError(f"{edge_name(edge)} is not an unfair edge of the model of '{model.child}'")

    weight = model.unfair_weights[K]
    if method == "linear":
        return weight
    if method != "general":
        raise InputError(f"Unknown edge unfairness method '{method}'")

    column = flows.expand(flows.unfair[K])
    if np.any(column <= 0.0):
        raise PositivityError(f"Flow {edge_name(edge)} has a zero cell", cell=edge_name(edge))

    full = approx_cpt(model, flows)
    weights = model.weights()
    weights[model.column_index(K)] = 0.0
    removed = approx_cpt(model, flows, weights)
    return float(np.mean(np.abs(full - removed) / column))


def edge_unfairness_report(fitted: FittedNetwork, method: str = "general") -> EdgeUnfairnessReport:
    """Unfairness of every unfair edge of a fitted network."""
    values = {}
    for edge in sorted(fitted.dag.unfair_edges):
        values[edge] = edge_unfairness(fitted.models[edge[1]], fitted.flows[edge[1]], edge, method)
    return EdgeUnfairnessReport(values=values, method=method)


def _alternatives(model: Factorization, s: Mapping[str, int]) -> List[Dict[str, int]]:
    s = model.dag.validate_assignment(s)
    if not s:
        raise InputError("Sensitive assignment cannot be empty")
    alternatives = [alt for alt in model.dag.iter_assignments(tuple(s)) if alt != s]
    if not alternatives:
        raise DegenerateDomainError(f"Sensitive nodes {sorted(s)} have no alternative value")
    return alternatives


def _check_decision(y: Mapping[str, int]) -> None:
    if len(y) != 1:
        raise InputError(f"Decision must assign exactly one node, got {sorted(y)}")


def cumulative_value(model: Factorization, s: Mapping[str, int], y: Mapping[str, int]) -> float:
    """Average of ``P(y | do(s)) - P(y | do(s'))`` over every s' != s."""
    _check_decision(y)
    alternatives = _alternatives(model, s)
    base = model.interventional(s, y)
    return sum(base - model.interventional(alt, y) for alt in alternatives) / len(alternatives)


def cumulative_unfairness(model: Cbn, s: Mapping[str, int], y: Mapping[str, int]) -> CumulativeUnfairness:
    """Cumulative unfairness of the decision ``y`` toward the sensitive value ``s``."""
    value = cumulative_value(model, s, y)
    return CumulativeUnfairness(s=dict(s), y=dict(y), value=value, exact=True)


def cumulative_unfairness_approx(fitted: FittedNetwork,
                                 s: Mapping[str, int],
                                 y: Mapping[str, int],
                                 weights: Optional[Mapping[str, np.ndarray]] = None) -> CumulativeUnfairness:
    """
    Cumulative unfairness evaluated on the linear approximation.

    Args:
        fitted: Fitted network
        s: Sensitive assignment
        y: Decision assignment
        weights: Optional per-node weight vectors, used as given
    """
    value = cumulative_value(fitted.approximation(weights), s, y)
    return CumulativeUnfairness(s=dict(s), y=dict(y), value=value, exact=False)


def cumulative_with_edge_weights(fitted: FittedNetwork,
                                 s: Mapping[str, int],
                                 y: Mapping[str, int],
                                 overrides: Mapping[Edge, float]) -> float:
    """Approximate cumulative unfairness with some unfair-edge weights replaced (no renormalization)."""
    weights: Dict[str, np.ndarray] = {}
    for (K, X), value in overrides.items():
        model = fitted.models.get(X)
        if model is None or K not in model.unfair_weights:
            raise InputError(f"{K}->{X} is not a fitted unfair edge")
        vector = weights.setdefault(X, model.weights())
        vector[model.column_index(K)] = value
    return cumulative_value(fitted.approximation(weights), s, y)


def sensitivity(fitted: FittedNetwork,
                edge: Edge,
                s: Mapping[str, int],
                y: Mapping[str, int],
                compensate: bool = False) -> float:
    """
    Derivative of the approximate cumulative unfairness with respect to the
    weight of ``edge``.

    The approximate interventional probabilities are multilinear in the
    approximated CPTs and the CPT of X is linear in its weights, so the
    derivative replaces that CPT by the edge's flow. It is zero when the
    factor of X never enters the query: X is intervened on by ``s`` or is not
    an ancestor of the decision node once edges into ``s`` are cut.

    Args:
        fitted: Fitted network
        edge: Unfair edge ``(K, X)``
        s: Sensitive assignment
        y: Decision assignment
        compensate: Move the weight against the fair-group flow, keeping the
            weights on the simplex
    """
    K, X = edge
    model = fitted.models.get(X)
    if model is None or K not in model.unfair_weights:
        raise InputError(f"{edge_name(edge)} is not a fitted unfair edge")
    _check_decision(y)
    flows = fitted.flows[X]
    if compensate and flows.fair is None:
        raise InputError(f"Node '{X}' has no fair group to compensate with")
    alternatives = _alternatives(fitted.model, s)
    if X not in fitted.model.relevant_nodes(y, s):
        return 0.0

    derivative = np.array(flows.expand(flows.unfair[K]))
    if compensate:
        derivative = derivative - flows.expand(flows.fair)

    factorization = fitted.approximation().replace({X: derivative})
    base = factorization.interventional(s, y)
    total = sum(base - factorization.interventional(alt, y) for alt in alternatives)
    return total / len(alternatives)


def potential(sens: float, c_approx: float) -> float:
    """
    Unfairness-reduction potential of an edge.

    With C at zero any movement is away from fairness, so the potential is
    ``|sens|``. Otherwise it is ``sens`` when C is positive and ``-sens`` when
    C is negative: positive exactly when lowering the weight moves C toward 0.
    """
    if abs(c_approx) <= ZERO_TOLERANCE:
        return abs(sens)
    return sens if c_approx > 0.0 else -sens


def rank_priorities(unfairness: Mapping[Edge, float],
                    potentials: Mapping[Edge, float],
                    w_u: float = 0.5,
                    w_p: float = 0.5) -> List[PriorityEntry]:
    """
    Combine unfairness and potential into a ranking.

    ``priority = w_u * U + w_p * P``. Higher priority first; ties are broken
    by edge name.
    """
    if w_u < 0.0 or w_p < 0.0:
        raise InputError("Priority weights must be non-negative")
    if set(unfairness) != set(potentials):
        raise InputError("Unfairness and potential must cover the same edges")

    rows = [(edge, unfairness[edge], potentials[edge], w_u * unfairness[edge] + w_p * potentials[edge])
            for edge in unfairness]
    rows.sort(key=lambda row: (-row[3], edge_name(row[0])))
    return [
        PriorityEntry(edge=edge, unfairness=u, potential=p, priority=priority, w_u=w_u, w_p=w_p, rank=rank)
        for rank, (edge, u, p, priority) in enumerate(rows, start=1)
    ]


def prioritize(model: Cbn,
               s: Mapping[str, int],
               y: Mapping[str, int],
               config: Optional[PriorityConfig] = None,
               fit_config: Optional[FitConfig] = None,
               fitted: Optional[FittedNetwork] = None) -> List[PriorityEntry]:
    """
    Rank the unfair edges of ``model`` for intervention.

    Fits the linear models (unless ``fitted`` is given), evaluates the
    approximate cumulative unfairness, then each edge's unfairness,
    sensitivity and potential.
    """
    config = config or PriorityConfig()
    if not model.dag.unfair_edges:
        raise InputError("The network has no unfair edges")
    fitted = fitted or fit_network(model, fit_config)

    c_approx = cumulative_unfairness_approx(fitted, s, y).value
    unfairness = edge_unfairness_report(fitted, "general").values
    potentials = {
        edge: potential(sensitivity(fitted, edge, s, y), c_approx)
        for edge in unfairness
    }

    ranking = rank_priorities(unfairness, potentials, config.unfairness_weight, config.potential_weight)
    logger.info("edges_prioritized", edges=len(ranking), c_approx=c_approx,
                top=ranking[0].name if ranking else None)
    return ranking
