"""Core components: graphs, inference, flows, fitting, unfairness and debiasing."""

from edgeflow.core.debias import debias_objective, joint_from_models, remove_discrimination
from edgeflow.core.distribution import (
    Cbn,
    Cpt,
    Factorization,
    JointTable,
    PathIntervention,
    SampleSet,
    mle_estimate,
    path_specific_effect,
    sample,
    total_effect,
)
from edgeflow.core.fit import FittedNetwork, approx_cpt, fit_cpt, fit_network, linear_realization, solve_clsp
from edgeflow.core.flow import EdgeFlowTable, NodeFlows, edge_flow, interventional_flow, node_flows, scaling_factor
from edgeflow.core.graph import CausalDag, DirectedPath, NodeSpec, WitnessReport, edge_name
from edgeflow.core.result import (
    CumulativeUnfairness,
    DebiasResult,
    EdgeUnfairnessReport,
    LinearCptModel,
    PriorityEntry,
    SolverResult,
)
from edgeflow.core.unfairness import (
    cumulative_unfairness,
    cumulative_unfairness_approx,
    edge_unfairness,
    edge_unfairness_report,
    potential,
    prioritize,
    rank_priorities,
    sensitivity,
)

__all__ = [
    "CausalDag",
    "Cbn",
    "Cpt",
    "CumulativeUnfairness",
    "DebiasResult",
    "DirectedPath",
    "EdgeFlowTable",
    "EdgeUnfairnessReport",
    "Factorization",
    "FittedNetwork",
    "JointTable",
    "LinearCptModel",
    "NodeFlows",
    "NodeSpec",
    "PathIntervention",
    "PriorityEntry",
    "SampleSet",
    "SolverResult",
    "WitnessReport",
    "approx_cpt",
    "cumulative_unfairness",
    "cumulative_unfairness_approx",
    "debias_objective",
    "edge_flow",
    "edge_name",
    "edge_unfairness",
    "edge_unfairness_report",
    "fit_cpt",
    "fit_network",
    "interventional_flow",
    "joint_from_models",
    "linear_realization",
    "mle_estimate",
    "node_flows",
    "path_specific_effect",
    "potential",
    "prioritize",
    "rank_priorities",
    "remove_discrimination",
    "sample",
    "scaling_factor",
    "sensitivity",
    "solve_clsp",
    "total_effect",
]
