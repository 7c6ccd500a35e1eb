"""
Discrimination removal.

Starting from the fitted linear models, the weights of every node with an
unfair parent are re-optimized to minimize

    sum of unfair-edge weights + utility_weight * ||P - Q||^2

where P is the observational joint and Q the product of the approximated
CPTs. Flows stay fixed at their observational values. Each node's weights
remain on their own simplex, so the feasible set is a product of simplices
and projected gradient descent applies block by block.
"""

from typing import Dict, List, Mapping, Optional

import numpy as np
import structlog

from edgeflow.config.schema import DebiasConfig
from edgeflow.core.distribution import Cbn, JointTable
from edgeflow.core.fit import FittedNetwork, fit_network, project_to_simplex
from edgeflow.core.graph import CausalDag
from edgeflow.core.result import DebiasResult, LinearCptModel

logger = structlog.get_logger(__name__)


def _on_joint(dag: CausalDag, node: str, table: np.ndarray) -> np.ndarray:
    """Broadcast a node table onto the joint axes and flatten it."""
    axes = dag.parents(node) + (node,)
    names = dag.names
    shape = [1] * len(names)
    for name in axes:
        shape[names.index(name)] = dag.cardinality(name)
    full = dag.cardinalities(names)
    return np.broadcast_to(np.asarray(table).reshape(shape), full).ravel()


class _Problem:
    """The debiasing objective in flattened joint coordinates."""

    def __init__(self, fitted: FittedNetwork, utility_weight: float):
        dag = fitted.dag
        self.fitted = fitted
        self.utility_weight = utility_weight
        self.target = fitted.model.pinned_product().ravel()

        fixed = np.ones_like(self.target)
        self.nodes: List[str] = []
        self.columns: Dict[str, np.ndarray] = {}
        self.masks: Dict[str, np.ndarray] = {}
        for name in dag.names:
            model = fitted.models.get(name)
            if model is None:
                fixed = fixed * _on_joint(dag, name, fitted.model.table(name))
            elif model.trivial:
                fixed = fixed * _on_joint(dag, name, fitted.approx_table(name))
            else:
                flows = fitted.flows[name]
                self.nodes.append(name)
                self.columns[name] = np.vstack([_on_joint(dag, name, col) for col in flows.expanded()])
                mask = np.ones(len(flows.columns()))
                if model.fair_weight is not None:
                    mask[0] = 0.0
                self.masks[name] = mask
        self.fixed = fixed

    def initial(self) -> Dict[str, np.ndarray]:
        return {name: self.fitted.models[name].weights() for name in self.nodes}

    def _factors(self, weights: Mapping[str, np.ndarray]) -> np.ndarray:
        if not self.nodes:
            return np.ones((0, self.target.size))
        return np.vstack([weights[name] @ self.columns[name] for name in self.nodes])

    def product(self, weights: Mapping[str, np.ndarray]) -> np.ndarray:
        return self.fixed * np.prod(self._factors(weights), axis=0)

    def unfairness(self, weights: Mapping[str, np.ndarray]) -> float:
        return float(sum(weights[name] @ self.masks[name] for name in self.nodes))

    def distance(self, weights: Mapping[str, np.ndarray]) -> float:
        residual = self.target - self.product(weights)
        return float(residual @ residual)

    def objective(self, weights: Mapping[str, np.ndarray]) -> float:
        return self.unfairness(weights) + self.utility_weight * self.distance(weights)

    def gradient(self, weights: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
        factors = self._factors(weights)
        count = factors.shape[0]
        prefix = np.ones_like(factors)
        suffix = np.ones_like(factors)
        for i in range(1, count):
            prefix[i] = prefix[i - 1] * factors[i - 1]
            suffix[count - 1 - i] = suffix[count - i] * factors[count - i]
        others = prefix * suffix * self.fixed

        residual = self.fixed * np.prod(factors, axis=0) - self.target
        return {
            name: self.masks[name] + 2.0 * self.utility_weight * (self.columns[name] @ (residual * others[i]))
            for i, name in enumerate(self.nodes)
        }


def _step(weights, gradient, step):
    return {name: project_to_simplex(w - step * gradient[name]) for name, w in weights.items()}


def _inner(a, b) -> float:
    return float(sum(a[name] @ b[name] for name in a))


def _minimize(problem: _Problem, start: Dict[str, np.ndarray], config: DebiasConfig):
    w = start
    f = problem.objective(w)
    trace = [f]
    step = 1.0
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        g = problem.gradient(w)
        while True:
            candidate = _step(w, g, step)
            delta = {name: candidate[name] - w[name] for name in w}
            f_candidate = problem.objective(candidate)
            if f_candidate <= f + _inner(g, delta) + _inner(delta, delta) / (2.0 * step) or step < 1e-20:
                break
            step *= 0.5

        if f_candidate > f:
            candidate, f_candidate = w, f
        decrease = f - f_candidate
        w, f = candidate, f_candidate
        trace.append(f)
        if decrease <= config.tolerance:
            converged = True
            break
        step = min(step * 2.0, 1e6)

    return w, f, iterations, converged, trace


def debias_objective(fitted: FittedNetwork,
                     weights: Optional[Mapping[str, np.ndarray]] = None,
                     utility_weight: float = 1.0) -> float:
    """
    Sum of unfair-edge weights plus ``utility_weight`` times the squared
    distance between the observational joint and the product of the
    approximated CPTs.

    Args:
        fitted: Fitted network supplying flows and starting weights
        weights: Per-node weight vectors (column order); fitted weights if omitted
        utility_weight: Weight of the distance term
    """
    problem = _Problem(fitted, utility_weight)
    current = problem.initial()
    current.update({name: np.asarray(w, dtype=float) for name, w in (weights or {}).items()
                    if name in current})
    return problem.objective(current)


def joint_from_models(fitted: FittedNetwork,
                      models: Optional[Mapping[str, LinearCptModel]] = None) -> JointTable:
    """
    Product of the approximated CPTs (roots keep their marginals), renormalized
    if it drifts from 1.
    """
    network = fitted.with_models(models) if models else fitted
    return network.approximation().joint_table(normalize=True)


def remove_discrimination(model: Cbn,
                          config: Optional[DebiasConfig] = None,
                          fitted: Optional[FittedNetwork] = None) -> DebiasResult:
    """
    Re-weight the linear models to trade unfairness against data utility.

    Optimization starts at the fitted weights; additional restarts draw
    weights uniformly from each simplex. The best iterate is returned even
    without convergence.
    """
    config = config or DebiasConfig()
    fitted = fitted or fit_network(model, config.fit)
    problem = _Problem(fitted, config.utility_weight)
    initial = problem.initial()

    rng = np.random.default_rng(config.seed)
    best = None
    for restart in range(config.restarts):
        if restart == 0:
            start = {name: w.copy() for name, w in initial.items()}
        else:
            start = {name: rng.dirichlet(np.ones(w.size)) for name, w in initial.items()}
        run = _minimize(problem, start, config)
        if best is None or run[1] < best[1]:
            best = run

    weights, objective, iterations, converged, trace = best
    if not converged:
        logger.warning("debias_not_converged", iterations=iterations, objective=objective)

    models = dict(fitted.models)
    for name, w in weights.items():
        approx = fitted.approx_table(name, w)
        mse = float(np.mean((approx - fitted.model.table(name)) ** 2))
        models[name] = fitted.models[name].with_weights(w, mse=mse, converged=converged, iterations=iterations)

    joint = joint_from_models(fitted, models)
    result = DebiasResult(
        models=models,
        joint=joint,
        objective_trace=tuple(trace),
        unfairness_before=problem.unfairness(initial),
        unfairness_after=problem.unfairness(weights),
        distance_before=problem.distance(initial),
        distance_after=problem.distance(weights),
        converged=converged,
        iterations=iterations,
        metadata={"utility_weight": config.utility_weight, "objective": objective},
    )
    logger.info("discrimination_removed",
                unfairness_before=result.unfairness_before,
                unfairness_after=result.unfairness_after,
                iterations=iterations)
    return result
