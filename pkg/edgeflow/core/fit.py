"""
Linear CPT approximation.

Every CPT with parents is approximated as a convex combination of the edge
flows entering the node (one fair-group flow, one flow per unfair parent).
The mixing weights come from a least-squares regression of the CPT entries
on the flow entries, constrained to the probability simplex.

The solver is a projected-gradient method with exact Euclidean projection
onto the simplex, backtracking step control and several random starting
points, followed by an exact solve on the detected support.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import structlog

from edgeflow.config.schema import FitConfig
from edgeflow.core.distribution import Cbn, Cpt, Factorization
from edgeflow.core.flow import FlowCache, NodeFlows, node_flows
from edgeflow.core.graph import Edge
from edgeflow.core.result import LinearCptModel, SolverResult
from edgeflow.errors import InputError

logger = structlog.get_logger(__name__)

SUPPORT_THRESHOLD = 1e-12


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{w : w >= 0, sum(w) = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    index = np.arange(1, v.size + 1)
    active = u - cumulative / index > 0.0
    rho = index[active][-1]
    tau = cumulative[active][-1] / rho
    return np.maximum(v - tau, 0.0)


@dataclass(frozen=True, eq=False)
class RegressionDesign:
    """
    Regression of one CPT on its edge flows.

    Rows enumerate ``(parent values..., child value)`` in row-major order.

    Attributes:
        child: Approximated node
        parents: Parents, canonical order
        targets: CPT entries, shape ``(N,)``
        inputs: Flow entries, shape ``(N, k)``; fair column first if present
        fair_group: Fair parents (empty when the node has none)
        unfair_parents: Unfair parents in column order
    """
    child: str
    parents: Tuple[str, ...]
    targets: np.ndarray
    inputs: np.ndarray
    fair_group: Tuple[str, ...]
    unfair_parents: Tuple[str, ...]

    @property
    def has_fair(self) -> bool:
        return bool(self.fair_group)

    @property
    def rows(self) -> int:
        return int(self.targets.shape[0])

    def residual_mse(self, weights: np.ndarray) -> float:
        residual = self.targets - self.inputs @ np.asarray(weights, dtype=float)
        return float(residual @ residual) / self.rows


def parent_mass(model: Factorization, X: str) -> np.ndarray:
    """Joint probability of every parent configuration of X, shape ``cardinalities(parents)``."""
    parents = set(model.dag.parents(X))
    joint = model.joint_table()
    axes = tuple(i for i, name in enumerate(joint.nodes) if name not in parents)
    return joint.table.sum(axis=axes)


def assemble_regression(model: Cbn, X: str, use_scaling: bool = True,
                        flows: Optional[NodeFlows] = None,
                        row_weighting: str = "uniform") -> RegressionDesign:
    """
    Build the regression of the CPT of X on its edge flows.

    With ``row_weighting="parent_mass"`` every row is scaled by the square root
    of its parent configuration's probability times the number of
    configurations, so row weights average to 1 and rare configurations
    count little.

    Args:
        model: Network holding the CPT to approximate
        X: Node with at least one parent
        use_scaling: Use scaled flows
        flows: Precomputed flows into X
        row_weighting: ``"uniform"`` or ``"parent_mass"``

    Raises:
        InputError: If X has no parents or the weighting is unknown
    """
    dag = model.dag
    if not dag.parents(X):
        raise InputError(f"Node '{X}' has no parents to regress on")
    if flows is None:
        flows = node_flows(model, X, use_scaling)
    if flows.child != X:
        raise InputError(f"Flows into '{flows.child}' cannot model '{X}'")

    targets = np.asarray(model.table(X), dtype=float).ravel()
    inputs = np.column_stack([table.ravel() for table in flows.expanded()])
    if row_weighting == "parent_mass":
        mass = parent_mass(model, X).ravel()
        scale = np.repeat(np.sqrt(mass * mass.size), dag.cardinality(X))
        targets = targets * scale
        inputs = inputs * scale[:, None]
    elif row_weighting != "uniform":
        raise InputError(f"Unknown row weighting '{row_weighting}'")

    return RegressionDesign(
        child=X,
        parents=flows.parents,
        targets=targets,
        inputs=inputs,
        fair_group=flows.fair_group,
        unfair_parents=flows.unfair_parents,
    )


class SimplexSolver(ABC):
    """Strategy for ``min ||y - A w||^2`` subject to ``w`` on the probability simplex."""

    @abstractmethod
    def solve(self, inputs: np.ndarray, targets: np.ndarray) -> SolverResult:
        pass


class ProjectedGradientSolver(SimplexSolver):
    """
    Projected gradient descent with backtracking and random restarts.

    The quadratic is kept in Gram form ``w'Qw - 2b'w + c``. After the descent,
    the equality-constrained problem on the detected support is solved
    exactly and accepted when it stays feasible and does not raise the
    objective.
    """

    def __init__(self, config: Optional[FitConfig] = None):
        self.config = config or FitConfig()

    def solve(self, inputs: np.ndarray, targets: np.ndarray) -> SolverResult:
        A = np.asarray(inputs, dtype=float)
        y = np.asarray(targets, dtype=float)
        if A.ndim != 2 or A.shape[0] != y.shape[0]:
            raise InputError(f"Design of shape {A.shape} does not match {y.shape[0]} targets")
        rows, k = A.shape
        if k == 0:
            raise InputError("Regression has no columns")

        gram = A.T @ A
        linear = A.T @ y
        constant = float(y @ y)

        def objective(w: np.ndarray) -> float:
            return max(float(w @ gram @ w - 2.0 * linear @ w + constant), 0.0)

        def gradient(w: np.ndarray) -> np.ndarray:
            return 2.0 * (gram @ w - linear)

        if k == 1:
            w = np.ones(1)
            f = objective(w)
            return SolverResult(weights=w, objective=f, mse=f / rows, iterations=0,
                                converged=True, stationarity=0.0, restarts=0, trace=(f,))

        curvature = 2.0 * float(np.linalg.eigvalsh(gram)[-1])
        initial_step = 1.0 / curvature if curvature > 0.0 else 1.0
        rng = np.random.default_rng(self.config.seed)

        best = None
        for restart in range(self.config.restarts):
            start = np.full(k, 1.0 / k) if restart == 0 else rng.dirichlet(np.ones(k))
            run = self._descend(start, objective, gradient, initial_step)
            if best is None or run[1] < best[1]:
                best = run

        w, f, iterations, converged, trace = best
        w, f = self._polish(w, f, gram, linear, objective)
        stationarity = float(np.linalg.norm(w - project_to_simplex(w - gradient(w))))

        return SolverResult(
            weights=w,
            objective=f,
            mse=f / rows,
            iterations=iterations,
            converged=converged,
            stationarity=stationarity,
            restarts=self.config.restarts,
            trace=tuple(trace),
        )

    def _descend(self, w, objective, gradient, initial_step):
        f = objective(w)
        trace = [f]
        step = initial_step
        converged = False
        iterations = 0

        for iterations in range(1, self.config.max_iterations + 1):
            g = gradient(w)
            while True:
                candidate = project_to_simplex(w - step * g)
                delta = candidate - w
                f_candidate = objective(candidate)
                if f_candidate <= f + g @ delta + (delta @ delta) / (2.0 * step) or step < 1e-20:
                    break
                step *= 0.5

            if f_candidate > f:
                candidate, f_candidate = w, f
            decrease = f - f_candidate
            w, f = candidate, f_candidate
            trace.append(f)
            if decrease <= self.config.tolerance:
                converged = True
                break
            step = min(step * 2.0, initial_step * 1e3)

        return w, f, iterations, converged, trace

    @staticmethod
    def _polish(w, f, gram, linear, objective):
        support = np.flatnonzero(w > SUPPORT_THRESHOLD)
        size = support.size
        kkt = np.zeros((size + 1, size + 1))
        kkt[:size, :size] = 2.0 * gram[np.ix_(support, support)]
        kkt[:size, size] = 1.0
        kkt[size, :size] = 1.0
        rhs = np.concatenate([2.0 * linear[support], [1.0]])

        solution = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:size]
        if np.any(solution < -SUPPORT_THRESHOLD):
            return w, f

        polished = np.zeros_like(w)
        polished[support] = np.clip(solution, 0.0, None)
        polished /= polished.sum()
        f_polished = objective(polished)
        if f_polished <= f:
            return polished, f_polished
        return w, f


def solve_clsp(inputs: np.ndarray, targets: np.ndarray, config: Optional[FitConfig] = None) -> SolverResult:
    """Simplex-constrained least squares with the default solver."""
    return ProjectedGradientSolver(config).solve(inputs, targets)


def fit_cpt(model: Cbn, X: str, config: Optional[FitConfig] = None,
            flows: Optional[NodeFlows] = None) -> LinearCptModel:
    """
    Fit the linear model of the CPT of X.

    Nodes without unfair parents get the single fair-group weight 1.

    Raises:
        InputError: If X has no parents
        PositivityError: If a flow cannot be computed
    """
    config = config or FitConfig()
    design = assemble_regression(model, X, config.use_scaling, flows, config.row_weighting)

    if not design.unfair_parents:
        return LinearCptModel(
            child=X,
            fair_group=design.fair_group,
            fair_weight=1.0,
            unfair_weights={},
            mse=design.residual_mse(np.ones(1)),
            used_scaling=config.use_scaling,
        )

    result = solve_clsp(design.inputs, design.targets, config)
    if not result.converged:
        logger.warning("fit_not_converged", node=X, iterations=result.iterations,
                       stationarity=result.stationarity)

    weights = result.weights
    offset = 1 if design.has_fair else 0
    fitted = LinearCptModel(
        child=X,
        fair_group=design.fair_group,
        fair_weight=float(weights[0]) if design.has_fair else None,
        unfair_weights={name: float(w) for name, w in zip(design.unfair_parents, weights[offset:])},
        mse=result.mse,
        used_scaling=config.use_scaling,
        converged=result.converged,
        stationarity=result.stationarity,
        iterations=result.iterations,
    )
    logger.debug("cpt_fitted", node=X, weights=fitted.weights().tolist(), mse=fitted.mse)
    return fitted


def approx_cpt(model: LinearCptModel, flows: NodeFlows, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """
    The approximated CPT ``sum_j w_j P_flow_j`` on the full parent layout.

    Args:
        model: Fitted linear model
        flows: Flows the model was fitted on
        weights: Optional weight vector overriding the model's (column order)
    """
    if flows.child != model.child:
        raise InputError(f"Flows into '{flows.child}' cannot model '{model.child}'")
    if flows.fair_group != model.fair_group or flows.unfair_parents != tuple(model.unfair_weights):
        raise InputError(f"Flow groups do not match the model of '{model.child}'")

    weights = model.weights() if weights is None else np.asarray(weights, dtype=float)
    table = np.zeros(flows.shape)
    for weight, column in zip(weights, flows.expanded()):
        table = table + weight * column
    return table


def linear_realization(model: Cbn, weights: Mapping[str, np.ndarray],
                       use_scaling: bool = True) -> Tuple[Cbn, Dict[str, NodeFlows]]:
    """
    Replace every CPT with parents by a given convex mix of the flows of ``model``.

    Returns the new network and the flows it was built from. Fitting the new
    network against those flows recovers ``weights`` exactly.

    Args:
        model: Network supplying the flows
        weights: Weight vector per node with parents, in column order
        use_scaling: Use scaled flows
    """
    dag = model.dag
    cache = FlowCache(model)
    tables = {}
    flows = {}
    for name in dag.names:
        if not dag.parents(name):
            tables[name] = model.table(name)
            continue
        node = cache.get(name, use_scaling)
        w = np.asarray(weights[name], dtype=float)
        if w.size != len(node.columns()):
            raise InputError(f"Node '{name}' needs {len(node.columns())} weights, got {w.size}")
        table = np.zeros(node.shape)
        for weight, column in zip(w, node.expanded()):
            table = table + weight * column
        tables[name] = table
        flows[name] = node

    cpts = [Cpt(name, dag.parents(name), tables[name]) for name in dag.names]
    return Cbn(dag, cpts), flows


class FittedNetwork:
    """
    Linear models for every node with parents, with the flows they were fit on.

    Root nodes keep their original marginals in the approximation.
    """

    def __init__(self, model: Cbn, models: Mapping[str, LinearCptModel], flows: Mapping[str, NodeFlows]):
        self.model = model
        self.models: Dict[str, LinearCptModel] = dict(models)
        self.flows: Dict[str, NodeFlows] = dict(flows)

    @property
    def dag(self):
        return self.model.dag

    def edge_weights(self) -> Dict[Edge, float]:
        weights: Dict[Edge, float] = {}
        for fitted in self.models.values():
            weights.update(fitted.edge_weights())
        return weights

    def weight_vector(self) -> np.ndarray:
        """All fitted weights concatenated in canonical node order."""
        parts = [self.models[name].weights() for name in self.dag.names if name in self.models]
        return np.concatenate(parts) if parts else np.zeros(0)

    def approx_table(self, X: str, weights: Optional[np.ndarray] = None) -> np.ndarray:
        return approx_cpt(self.models[X], self.flows[X], weights)

    def approximation(self, weights: Optional[Mapping[str, np.ndarray]] = None) -> Factorization:
        """
        The approximated network as a factorization.

        Args:
            weights: Optional per-node weight vectors overriding the fitted ones;
                they are used as given, without renormalization
        """
        weights = weights or {}
        tables = {}
        for name in self.dag.names:
            if name in self.models:
                tables[name] = self.approx_table(name, weights.get(name))
            else:
                tables[name] = self.model.table(name)
        return Factorization(self.dag, tables)

    def with_models(self, models: Mapping[str, LinearCptModel]) -> "FittedNetwork":
        merged = dict(self.models)
        merged.update(models)
        return FittedNetwork(self.model, merged, self.flows)


def fit_network(model: Cbn, config: Optional[FitConfig] = None,
                flows: Optional[Mapping[str, NodeFlows]] = None) -> FittedNetwork:
    """Fit a linear model to every node with parents."""
    config = config or FitConfig()
    dag = model.dag
    cache = FlowCache(model)
    flows = dict(flows or {})
    models = {}
    for name in dag.names:
        if not dag.parents(name):
            continue
        if name not in flows:
            flows[name] = cache.get(name, config.use_scaling)
        models[name] = fit_cpt(model, name, config, flows[name])

    logger.info("network_fitted", nodes=len(models), scaled=config.use_scaling)
    return FittedNetwork(model, models, flows)
