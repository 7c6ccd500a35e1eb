"""
Edge flows.

The flow along a group of direct edges M -> X is the interventional
distribution ``P(x | do(m))`` reweighted by a scaling factor: the average
multiplicative path-specific effect of switching M from every other value
m' to m along the direct edges only. Normalizing over x gives a PMF per m.

The fair parents of a node form one group; every unfair (sensitive)
parent forms its own group.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import structlog

from edgeflow.core.distribution import Factorization, PathIntervention
from edgeflow.errors import DegenerateDomainError, InputError, PositivityError

logger = structlog.get_logger(__name__)

FLOW_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class EdgeFlowTable:
    """
    Flow of a parent group into a child.

    Attributes:
        child: Receiving node X
        group: Parent group M, canonical order
        scaling: ``S(m, x)``, shape ``cards(M) + (card(X),)``
        flow: ``P_flow(x | m)``, same shape; rows sum to 1
        normalizer: ``sum_x S(m, x) P(x | do(m))``, shape ``cards(M)``
        scaled: False when the scaling factor was replaced by 1
    """
    child: str
    group: Tuple[str, ...]
    scaling: np.ndarray
    flow: np.ndarray
    normalizer: np.ndarray
    scaled: bool = True

    def __post_init__(self):
        if np.any(self.scaling < 0.0):
            raise InputError(f"Negative scaling factor in flow into '{self.child}'")
        sums = self.flow.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > FLOW_TOLERANCE):
            raise InputError(f"Flow rows into '{self.child}' do not sum to 1")
        if np.any(self.normalizer <= 0.0):
            raise InputError(f"Flow normalizer into '{self.child}' is not positive")

    @property
    def label(self) -> str:
        return ",".join(self.group) + "->" + self.child

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.flow > 0.0))

    def value(self, m: Mapping[str, int], x: int) -> float:
        return float(self.flow[tuple(m[name] for name in self.group) + (x,)])

    def expand(self, parents: Sequence[str], shape: Sequence[int]) -> np.ndarray:
        """
        Broadcast the flow onto a full parent layout.

        Args:
            parents: All parents of the child, canonical order
            shape: ``cards(parents) + (card(X),)``
        """
        parents = tuple(parents)
        missing = [name for name in self.group if name not in parents]
        if missing:
            raise InputError(f"Flow group {self.group} is not contained in {parents}")

        compact = [1] * len(shape)
        for name, size in zip(self.group, self.flow.shape[:-1]):
            compact[parents.index(name)] = size
        compact[-1] = self.flow.shape[-1]
        return np.broadcast_to(self.flow.reshape(compact), tuple(shape))


@dataclass(frozen=True, eq=False)
class NodeFlows:
    """
    All flows into one node.

    Attributes:
        child: Receiving node
        parents: All parents, canonical order
        shape: ``cards(parents) + (card(child),)``
        fair: Flow of the fair-parent group, or None if there are no fair parents
        unfair: Flow per unfair parent, canonical order
        scaled: Whether the scaling factor was used
    """
    child: str
    parents: Tuple[str, ...]
    shape: Tuple[int, ...]
    fair: Optional[EdgeFlowTable]
    unfair: Dict[str, EdgeFlowTable] = field(default_factory=dict)
    scaled: bool = True

    @property
    def unfair_parents(self) -> Tuple[str, ...]:
        return tuple(self.unfair)

    @property
    def fair_group(self) -> Tuple[str, ...]:
        return self.fair.group if self.fair is not None else ()

    def columns(self) -> Tuple[EdgeFlowTable, ...]:
        """Flow tables in regression column order: fair group first, then unfair parents."""
        tables = (self.fair,) if self.fair is not None else ()
        return tables + tuple(self.unfair.values())

    def expanded(self) -> Tuple[np.ndarray, ...]:
        return tuple(table.expand(self.parents, self.shape) for table in self.columns())

    def expand(self, table: EdgeFlowTable) -> np.ndarray:
        return table.expand(self.parents, self.shape)


def _canonical_group(model: Factorization, M: Iterable[str], X: str) -> Tuple[str, ...]:
    dag = model.dag
    group = dag.canonical(M)
    if not group:
        raise InputError(f"Empty parent group for node '{X}'")
    parents = dag.parents(X)
    outside = [name for name in group if name not in parents]
    if outside:
        raise InputError(f"{outside} are not parents of '{X}'")
    return group


def _direct_paths(model: Factorization, group: Sequence[str], X: str):
    return frozenset(model.dag.path(name, X) for name in group)


def scaling_factor(model: Factorization, M: Iterable[str], m: Mapping[str, int], X: str, x: int) -> float:
    """
    ``S(m, x)``: the multiplicative path-specific effect of ``m`` against every
    other joint value m' of M, along the direct edges M -> X, averaged over m'.

    Raises:
        DegenerateDomainError: If M has a single joint value
        PositivityError: If some ``P(x | do(m'))`` is zero
    """
    group = _canonical_group(model, M, X)
    m = model.dag.validate_assignment({name: m[name] for name in group})
    alternatives = [alt for alt in model.dag.iter_assignments(group) if alt != m]
    if not alternatives:
        raise DegenerateDomainError(f"Group {group} has no alternative value")

    pi = _direct_paths(model, group, X)
    total = 0.0
    for alt in alternatives:
        denominator = model.interventional(alt, {X: x})
        if denominator <= 0.0:
            raise PositivityError(
                f"P({X}={x} | do({model.dag.format_assignment(alt)})) is zero",
                cell=model.dag.format_assignment({**alt, X: x}),
            )
        numerator = model.path_specific(PathIntervention(pi, on_value=m, off_value=alt), {X: x})
        total += numerator / denominator
    return total / len(alternatives)


def edge_flow(model: Factorization, M: Iterable[str], X: str, use_scaling: bool = True) -> EdgeFlowTable:
    """
    Flow table of group M into X.

    Args:
        model: Network to evaluate
        M: Parent group of X
        X: Child node
        use_scaling: Replace the scaling factor by 1 when False

    Raises:
        PositivityError: If an interventional probability or a normalizer is zero
        DegenerateDomainError: If scaling is requested and M has a single joint value
    """
    dag = model.dag
    group = _canonical_group(model, M, X)
    group_shape = dag.cardinalities(group)
    card = dag.cardinality(X)
    assignments = list(dag.iter_assignments(group))

    do_rows = np.array([model.interventional_distribution(m, X) for m in assignments])
    scaling = np.ones((len(assignments), card))

    if use_scaling:
        if len(assignments) < 2:
            raise DegenerateDomainError(f"Group {group} has no alternative value")
        pi = _direct_paths(model, group, X)
        for j, alt in enumerate(assignments):
            zero = np.flatnonzero(do_rows[j] <= 0.0)
            if zero.size:
                raise PositivityError(
                    f"P({X}={int(zero[0])} | do({dag.format_assignment(alt)})) is zero",
                    cell=dag.format_assignment({**alt, X: int(zero[0])}),
                )
        for i, m in enumerate(assignments):
            acc = np.zeros(card)
            for j, alt in enumerate(assignments):
                if j == i:
                    continue
                numerator = model.path_specific_distribution(
                    PathIntervention(pi, on_value=m, off_value=alt), X
                )
                acc += numerator / do_rows[j]
            scaling[i] = acc / (len(assignments) - 1)

    weighted = scaling * do_rows
    normalizer = weighted.sum(axis=1)
    zero = np.flatnonzero(normalizer <= 0.0)
    if zero.size:
        where = dag.format_assignment(assignments[int(zero[0])])
        raise PositivityError(f"Flow normalizer into '{X}' is zero at {where}", cell=where)

    flow = weighted / normalizer[:, None]
    return EdgeFlowTable(
        child=X,
        group=group,
        scaling=scaling.reshape(group_shape + (card,)),
        flow=flow.reshape(group_shape + (card,)),
        normalizer=normalizer.reshape(group_shape),
        scaled=use_scaling,
    )


def interventional_flow(model: Factorization, M: Iterable[str], X: str) -> EdgeFlowTable:
    """The unscaled flow: ``P(x | do(m))`` itself."""
    return edge_flow(model, M, X, use_scaling=False)


def node_flows(model: Factorization, X: str, use_scaling: bool = True) -> NodeFlows:
    """Flows of the fair group and of every unfair parent into X."""
    dag = model.dag
    parents = dag.parents(X)
    if not parents:
        raise InputError(f"Node '{X}' has no parents")

    fair_parents = dag.fair_parents(X)
    fair = edge_flow(model, fair_parents, X, use_scaling) if fair_parents else None
    unfair = {name: edge_flow(model, (name,), X, use_scaling) for name in dag.unfair_parents(X)}

    logger.debug("node_flows_computed", node=X, groups=len(unfair) + (fair is not None), scaled=use_scaling)
    return NodeFlows(
        child=X,
        parents=parents,
        shape=dag.cardinalities(parents + (X,)),
        fair=fair,
        unfair=unfair,
        scaled=use_scaling,
    )


class FlowCache:
    """Computes flows of one network once per (child, scaling) pair."""

    def __init__(self, model: Factorization):
        self.model = model
        self._flows: Dict[Tuple[str, bool], NodeFlows] = {}

    def get(self, X: str, use_scaling: bool = True) -> NodeFlows:
        key = (X, use_scaling)
        if key not in self._flows:
            self._flows[key] = node_flows(self.model, X, use_scaling)
        return self._flows[key]

    def __len__(self) -> int:
        return len(self._flows)
