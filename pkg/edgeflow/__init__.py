"""
edgeflow - edge flows and edge unfairness for discrete causal Bayesian networks

Decomposes each conditional probability table into the beliefs flowing along
its incoming edges, measures how much of every decision rides on edges out
of sensitive attributes, ranks those edges for intervention and re-weights
them to remove discrimination while keeping the joint distribution close
to the data.
"""

__version__ = "0.1.0"
__author__ = "edgeflow Development Team"

from edgeflow.config.schema import DebiasConfig, FitConfig, PriorityConfig, StudyConfig
from edgeflow.core.debias import remove_discrimination
from edgeflow.core.distribution import Cbn, Cpt, PathIntervention
from edgeflow.core.fit import fit_cpt, fit_network
from edgeflow.core.flow import edge_flow
from edgeflow.core.graph import CausalDag, NodeSpec
from edgeflow.core.unfairness import cumulative_unfairness, edge_unfairness, prioritize, sensitivity
from edgeflow.errors import EdgeFlowError, InputError, PreconditionError
from edgeflow.storage.model_file import load_model, save_model

__all__ = [
    "CausalDag",
    "Cbn",
    "Cpt",
    "DebiasConfig",
    "EdgeFlowError",
    "FitConfig",
    "InputError",
    "NodeSpec",
    "PathIntervention",
    "PreconditionError",
    "PriorityConfig",
    "StudyConfig",
    "cumulative_unfairness",
    "edge_flow",
    "edge_unfairness",
    "fit_cpt",
    "fit_network",
    "load_model",
    "prioritize",
    "remove_discrimination",
    "save_model",
    "sensitivity",
]
