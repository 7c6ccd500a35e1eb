"""
Result data structures for edgeflow.

This module defines the outputs of CPT fitting, unfairness measurement,
prioritization and discrimination removal.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from edgeflow.core.graph import Edge, edge_name

WEIGHT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class SolverResult:
    """
    Outcome of a simplex-constrained least-squares solve.

    Attributes:
        weights: Solution on the probability simplex
        objective: Residual sum of squares at the solution
        mse: Objective divided by the number of regression rows
        iterations: Projected-gradient iterations of the best restart
        converged: Whether the objective decrease fell below tolerance
        stationarity: Norm of ``w - proj(w - grad)``; zero at a KKT point
        restarts: Number of starting points tried
        trace: Objective after each iteration of the best restart
    """
    weights: np.ndarray
    objective: float
    mse: float
    iterations: int
    converged: bool
    stationarity: float
    restarts: int = 1
    trace: Tuple[float, ...] = ()


@dataclass(frozen=True)
class LinearCptModel:
    """
    Linear approximation of one CPT as a convex mix of edge flows.

    Attributes:
        child: Approximated node
        fair_group: Fair parents, empty when the node has none
        fair_weight: Weight of the fair-group flow, None when there is no fair group
        unfair_weights: Weight per unfair parent, canonical order
        mse: Mean squared error against the original CPT
        used_scaling: Whether the flows were scaled
        converged: Solver convergence flag
        stationarity: Solver KKT residual
        iterations: Solver iterations
    """
    child: str
    fair_group: Tuple[str, ...]
    fair_weight: Optional[float]
    unfair_weights: Dict[str, float]
    mse: float = 0.0
    used_scaling: bool = True
    converged: bool = True
    stationarity: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        weights = self.weights()
        if weights.size == 0:
            raise ValueError(f"Model of '{self.child}' has no weights")
        if np.any(weights < -WEIGHT_TOLERANCE) or np.any(weights > 1.0 + WEIGHT_TOLERANCE):
            raise ValueError(f"Weights of '{self.child}' must lie in [0, 1], got {weights}")
        if abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"Weights of '{self.child}' must sum to 1, got {weights.sum()}")

    def weights(self) -> np.ndarray:
        """All weights in column order: fair group first, then unfair parents."""
        values = [] if self.fair_weight is None else [self.fair_weight]
        values.extend(self.unfair_weights.values())
        return np.asarray(values, dtype=float)

    def column_index(self, parent: str) -> int:
        """Position of an unfair parent's weight in the column order."""
        return list(self.unfair_weights).index(parent) + (0 if self.fair_weight is None else 1)

    def column_labels(self) -> Tuple[str, ...]:
        labels = () if self.fair_weight is None else ("fair(" + ",".join(self.fair_group) + ")",)
        return labels + tuple(self.unfair_weights)

    def edge_weights(self) -> Dict[Edge, float]:
        return {(parent, self.child): weight for parent, weight in self.unfair_weights.items()}

    @property
    def trivial(self) -> bool:
        """True when the node has no unfair parent, so the single weight is fixed at 1."""
        return not self.unfair_weights

    def with_weights(self, weights: np.ndarray, mse: Optional[float] = None, **changes: Any) -> "LinearCptModel":
        """Copy with a new weight vector in column order."""
        weights = [float(w) for w in np.clip(weights, 0.0, 1.0)]
        offset = 0 if self.fair_weight is None else 1
        fair = None if self.fair_weight is None else weights[0]
        unfair = dict(zip(self.unfair_weights, weights[offset:]))
        return LinearCptModel(
            child=self.child,
            fair_group=self.fair_group,
            fair_weight=fair,
            unfair_weights=unfair,
            mse=self.mse if mse is None else mse,
            used_scaling=changes.get("used_scaling", self.used_scaling),
            converged=changes.get("converged", self.converged),
            stationarity=changes.get("stationarity", self.stationarity),
            iterations=changes.get("iterations", self.iterations),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "child": self.child,
            "fair_group": list(self.fair_group),
            "fair_weight": self.fair_weight,
            "unfair_weights": dict(self.unfair_weights),
            "mse": self.mse,
            "used_scaling": self.used_scaling,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class EdgeUnfairnessReport:
    """Unfairness of every unfair edge, and how it was evaluated."""
    values: Dict[Edge, float]
    method: str = "general"

    def total(self) -> float:
        return float(sum(self.values.values()))

    def to_dict(self) -> Dict[str, float]:
        return {edge_name(edge): value for edge, value in sorted(self.values.items())}


@dataclass(frozen=True)
class CumulativeUnfairness:
    """
    Average total effect of the sensitive value ``s`` against every alternative.

    Attributes:
        s: Sensitive assignment
        y: Decision assignment
        value: The cumulative unfairness
        exact: False when evaluated on the linear approximation
    """
    s: Dict[str, int]
    y: Dict[str, int]
    value: float
    exact: bool = True


@dataclass(frozen=True)
class PriorityEntry:
    """
    One row of a priority ranking.

    Attributes:
        edge: Unfair edge
        unfairness: Edge unfairness U
        potential: Unfairness-reduction potential P
        priority: ``w_u * U + w_p * P``
        w_u: Weight of the unfairness
        w_p: Weight of the potential
        rank: 1 for the highest priority
    """
    edge: Edge
    unfairness: float
    potential: float
    priority: float
    w_u: float = 1.0
    w_p: float = 1.0
    rank: int = 0

    @property
    def name(self) -> str:
        return edge_name(self.edge)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rank": self.rank,
            "edge": self.name,
            "unfairness": self.unfairness,
            "potential": self.potential,
            "priority": self.priority,
        }


@dataclass(frozen=True)
class DebiasResult:
    """
    Outcome of discrimination removal.

    Attributes:
        models: Re-weighted linear models, per node
        joint: Product of the re-weighted approximations, renormalized if needed
        objective_trace: Objective value per iteration, non-increasing
        unfairness_before: Sum of unfair-edge weights at the starting point
        unfairness_after: Sum of unfair-edge weights at the solution
        distance_before: Squared joint distance to the original at the start
        distance_after: Squared joint distance to the original at the solution
        converged: Whether the objective decrease fell below tolerance
        iterations: Iterations performed
    """
    models: Dict[str, LinearCptModel]
    joint: Any
    objective_trace: Tuple[float, ...]
    unfairness_before: float
    unfairness_after: float
    distance_before: float
    distance_after: float
    converged: bool
    iterations: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    def edge_weights(self) -> Dict[Edge, float]:
        weights: Dict[Edge, float] = {}
        for model in self.models.values():
            weights.update(model.edge_weights())
        return weights

    def summary(self) -> List[str]:
        lines = [
            f"unfairness: {self.unfairness_before:.6g} -> {self.unfairness_after:.6g}",
            f"squared joint distance: {self.distance_before:.6g} -> {self.distance_after:.6g}",
            f"iterations: {self.iterations} (converged: {self.converged})",
        ]
        lines.extend(f"  {edge_name(edge)}: {weight:.6g}" for edge, weight in sorted(self.edge_weights().items()))
        return lines
