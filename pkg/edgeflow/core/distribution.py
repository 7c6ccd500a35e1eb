"""
Discrete causal Bayesian networks and exact inference.

A ``Factorization`` holds one table per node of a DAG, indexed as
``table[parent values..., own value]``, and evaluates products of those
tables over the joint value space. Interventional and path-specific
distributions are computed with the truncated factorization: intervened
nodes drop their factor and their children read a pinned value instead.

``Cbn`` is a validated factorization whose tables are conditional
probability tables. Approximated networks (see ``edgeflow.core.fit``) reuse
the plain ``Factorization`` engine.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import structlog

from edgeflow.core.graph import Assignment, CausalDag, DirectedPath, Edge
from edgeflow.errors import (
    InputError,
    PositivityError,
    RecantingWitnessError,
    ZeroProbabilityError,
)

logger = structlog.get_logger(__name__)

ROW_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Cpt:
    """
    Conditional probability table of one node.

    Attributes:
        child: Node the table belongs to
        parents: Parent names in canonical order
        table: Array of shape ``(card(p1), ..., card(pk), card(child))``
        fallback_rows: Parent configurations filled with a uniform row because
            no data was available for them
    """
    child: str
    parents: Tuple[str, ...]
    table: np.ndarray
    fallback_rows: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        parents = tuple(self.parents)

        if table.ndim != len(parents) + 1:
            raise InputError(
                f"CPT of '{self.child}' has {table.ndim} axes, expected {len(parents) + 1}"
            )

        if np.any(~np.isfinite(table)) or np.any(table < 0.0) or np.any(table > 1.0 + ROW_TOLERANCE):
            raise InputError(f"CPT of '{self.child}' has entries outside [0, 1]")

        sums = np.atleast_1d(table.sum(axis=-1))
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOLERANCE)
        if bad.size:
            row = tuple(int(i) for i in bad[0])
            raise InputError(
                f"CPT row {self.child}|{row} sums to {sums[row]:.12g}, expected 1"
            )

        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "fallback_rows", tuple(tuple(r) for r in self.fallback_rows))

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.table > 0.0))

    def row(self, parent_values: Mapping[str, int]) -> np.ndarray:
        return self.table[tuple(parent_values[p] for p in self.parents)]

    def prob(self, value: int, parent_values: Mapping[str, int]) -> float:
        return float(self.row(parent_values)[value])

    def first_zero_cell(self) -> Optional[Tuple[int, ...]]:
        zeros = np.argwhere(self.table <= 0.0)
        return tuple(int(i) for i in zeros[0]) if zeros.size else None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cpt):
            return NotImplemented
        return (self.child == other.child
                and self.parents == other.parents
                and np.array_equal(self.table, other.table))

    __hash__ = None


@dataclass(frozen=True)
class PathIntervention:
    """
    Edge intervention: paths in ``pi`` see ``on_value``, every other path out
    of the source nodes sees ``off_value``.

    Both assignments cover exactly the source nodes.
    """
    pi: FrozenSet[DirectedPath]
    on_value: Mapping[str, int]
    off_value: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "pi", frozenset(self.pi))
        object.__setattr__(self, "on_value", dict(self.on_value))
        object.__setattr__(self, "off_value", dict(self.off_value))

        if set(self.on_value) != set(self.off_value):
            raise InputError("on_value and off_value must assign the same nodes")
        if not self.on_value:
            raise InputError("A path intervention needs at least one source node")

        for path in self.pi:
            if path.source not in self.on_value:
                raise InputError(f"Path {path} starts outside the intervened nodes")

    @property
    def sources(self) -> FrozenSet[str]:
        return frozenset(self.on_value)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class JointTable:
    """
    A joint distribution over nodes, as a dense array in the given node order.

    Attributes:
        nodes: Axis order
        table: Probabilities, shape ``cardinalities(nodes)``
        renormalization_delta: ``1 - sum`` before the table was renormalized
    """
    nodes: Tuple[str, ...]
    table: np.ndarray
    renormalization_delta: float = 0.0

    def prob(self, assignment: Mapping[str, int]) -> float:
        return float(self.table[tuple(assignment[name] for name in self.nodes)])

    def items(self) -> Iterator[Tuple[Assignment, float]]:
        for index in np.ndindex(*self.table.shape):
            yield dict(zip(self.nodes, index)), float(self.table[index])

    def total(self) -> float:
        return float(self.table.sum())

    def total_variation(self, other: "JointTable") -> float:
        if tuple(other.nodes) != tuple(self.nodes):
            raise InputError("Joint tables are over different node orders")
        return 0.5 * float(np.abs(self.table - other.table).sum())


@dataclass(frozen=True, eq=False)
class SampleSet:
    """
    I.i.d. complete assignments, one row per sample.

    Attributes:
        nodes: Column order
        values: Integer matrix of shape ``(n, len(nodes))``
        seed: Seed the samples were drawn with, if known
    """
    nodes: Tuple[str, ...]
    values: np.ndarray
    seed: Optional[int] = None

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.nodes.index(name)]

    def to_frame(self, dag: Optional[CausalDag] = None) -> pd.DataFrame:
        """Samples as a data frame; with a DAG, values are replaced by their labels."""
        frame = pd.DataFrame(self.values, columns=list(self.nodes))
        if dag is not None:
            for name in self.nodes:
                labels = np.asarray(dag.node(name).value_labels, dtype=object)
                frame[name] = labels[frame[name].to_numpy()]
        return frame

    @classmethod
    def from_frame(cls, dag: CausalDag, frame: pd.DataFrame) -> "SampleSet":
        """Read samples from a frame of value labels (or integer indices)."""
        missing = [name for name in dag.names if name not in frame.columns]
        if missing:
            raise InputError(f"Sample table is missing columns: {missing}")

        columns = []
        for name in dag.names:
            spec = dag.node(name)
            lookup = {label: i for i, label in enumerate(spec.value_labels)}
            raw = frame[name].astype(str).str.strip()
            unknown = sorted(set(raw) - set(lookup))
            if unknown:
                raise InputError(f"Column '{name}' has unknown values: {unknown[:5]}")
            columns.append(raw.map(lookup).to_numpy(dtype=np.int64))

        values = np.column_stack(columns) if columns else np.empty((0, 0), dtype=np.int64)
        return cls(nodes=dag.names, values=values)


class Factorization:
    """
    Product of per-node tables over a DAG.

    Tables are not validated as probability tables, so the same engine
    evaluates approximated networks and derivative factors.
    """

    def __init__(self, dag: CausalDag, tables: Mapping[str, np.ndarray]):
        self.dag = dag
        self._tables: Dict[str, np.ndarray] = {}
        for name in dag.names:
            if name not in tables:
                raise InputError(f"Missing table for node '{name}'")
            table = np.asarray(tables[name], dtype=float)
            expected = dag.cardinalities(dag.parents(name) + (name,))
            if table.shape != expected:
                raise InputError(f"Table of '{name}' has shape {table.shape}, expected {expected}")
            self._tables[name] = table
        self._axis = {name: i for i, name in enumerate(dag.names)}
        self._shape = dag.cardinalities(dag.names)

    def table(self, name: str) -> np.ndarray:
        return self._tables[name]

    def replace(self, tables: Mapping[str, np.ndarray]) -> "Factorization":
        """Copy with some node tables swapped out."""
        merged = dict(self._tables)
        merged.update(tables)
        return Factorization(self.dag, merged)

    # === TENSOR ENGINE

    def _factor(self, node: str, pins: Mapping[str, int]) -> np.ndarray:
        """The table of ``node`` broadcast onto the joint axes, with some parents pinned."""
        parents = self.dag.parents(node)
        index = tuple(pins[p] if p in pins else slice(None) for p in parents) + (slice(None),)
        factor = self._tables[node][index]

        free = [p for p in parents if p not in pins] + [node]
        shape = [1] * len(self._shape)
        for name in free:
            shape[self._axis[name]] = self._shape[self._axis[name]]
        return factor.reshape(shape)

    def pinned_product(self,
                       intervened: Iterable[str] = (),
                       pins: Optional[Mapping[str, Mapping[str, int]]] = None,
                       nodes: Optional[Iterable[str]] = None) -> np.ndarray:
        """
        Product of the factors of every non-intervened node.

        Args:
            intervened: Nodes whose factor is dropped
            pins: ``pins[V][P]`` fixes parent P of V to a value. Every intervened
                parent of a kept node must be pinned.
            nodes: Restrict the product to these nodes (default: all)

        Returns:
            Array over the joint axes; intervened axes and axes of skipped
            nodes have length 1
        """
        intervened = frozenset(intervened)
        kept = None if nodes is None else frozenset(nodes)
        pins = pins or {}
        product = np.ones([1] * len(self._shape))
        for node in self.dag.names:
            if node in intervened or (kept is not None and node not in kept):
                continue
            product = product * self._factor(node, pins.get(node, {}))
        return product

    def _sum_at(self, tensor: np.ndarray, values: Mapping[str, int]) -> float:
        index = tuple(
            values[name] if name in values and tensor.shape[axis] > 1 else slice(None)
            for name, axis in self._axis.items()
        )
        return float(tensor[index].sum())

    def _distribution_of(self, tensor: np.ndarray, target: str) -> np.ndarray:
        axis = self._axis[target]
        others = tuple(i for i in range(tensor.ndim) if i != axis)
        return tensor.sum(axis=others)

    def relevant_nodes(self, targets: Iterable[str], intervened: Iterable[str] = ()) -> FrozenSet[str]:
        """
        Targets and their ancestors once edges into ``intervened`` are cut.

        Only these factors enter a query; in a CBN every other factor sums out to 1.
        """
        intervened = frozenset(intervened)
        relevant = set()
        stack = [name for name in targets if name not in intervened]
        while stack:
            name = stack.pop()
            if name in relevant:
                continue
            relevant.add(name)
            stack.extend(p for p in self.dag.parents(name) if p not in intervened)
        return frozenset(relevant)

    @staticmethod
    def _do_pins(dag: CausalDag, do: Mapping[str, int]) -> Dict[str, Dict[str, int]]:
        return {
            node: {p: do[p] for p in dag.parents(node) if p in do}
            for node in dag.names if node not in do
        }

    # === INFERENCE

    def joint_prob(self, assignment: Mapping[str, int]) -> float:
        """Probability of a complete assignment: the product of its table entries."""
        assignment = self.dag.validate_assignment(assignment, complete=True)
        prob = 1.0
        for node in self.dag.names:
            index = tuple(assignment[p] for p in self.dag.parents(node)) + (assignment[node],)
            prob *= float(self._tables[node][index])
        return prob

    def marginal(self, y: Mapping[str, int]) -> float:
        return self.interventional({}, y)

    def query(self, y: Mapping[str, int], given: Optional[Mapping[str, int]] = None) -> float:
        """
        Conditional probability ``P(y | given)``.

        Raises:
            ZeroProbabilityError: If ``P(given) = 0``
        """
        given = self.dag.validate_assignment(given or {})
        y = self.dag.validate_assignment(y)
        for name, value in y.items():
            if name in given and given[name] != value:
                return 0.0

        denominator = self.marginal(given)
        if denominator <= 0.0:
            raise ZeroProbabilityError(
                f"Conditioning event {self.dag.format_assignment(given)} has probability zero"
            )
        return self.marginal({**given, **y}) / denominator

    def interventional(self, do: Mapping[str, int], y: Mapping[str, int]) -> float:
        """
        ``P(y | do(do))`` by the truncated factorization.

        Entries of ``y`` on intervened nodes act as an indicator of consistency.
        """
        do = self.dag.validate_assignment(do)
        y = self.dag.validate_assignment(y)

        for name, value in y.items():
            if name in do and do[name] != value:
                return 0.0
        remaining = {name: value for name, value in y.items() if name not in do}

        tensor = self.pinned_product(do, self._do_pins(self.dag, do), self.relevant_nodes(remaining, do))
        return self._sum_at(tensor, remaining)

    def interventional_distribution(self, do: Mapping[str, int], target: str) -> np.ndarray:
        """Vector ``P(target = x | do(do))`` over all values x."""
        do = self.dag.validate_assignment(do)
        if target in do:
            raise InputError(f"Target '{target}' is intervened on")
        tensor = self.pinned_product(do, self._do_pins(self.dag, do), self.relevant_nodes((target,), do))
        return self._distribution_of(tensor, target)

    def _path_pins(self, intervention: PathIntervention, targets: Sequence[str]) -> Dict[str, Dict[str, int]]:
        dag = self.dag
        sources = intervention.sources
        on_value = dag.validate_assignment(intervention.on_value)
        off_value = dag.validate_assignment(intervention.off_value)

        for path in intervention.pi:
            if path.target not in targets:
                raise InputError(f"Path {path} does not end at a queried node")

        on_edges = set()
        for target in targets:
            if target in sources:
                raise InputError(f"Queried node '{target}' is an intervened source")
            paths = frozenset(p for p in intervention.pi if p.target == target)
            report = dag.recanting_witness(sources, target, paths)
            if not report.identifiable:
                raise RecantingWitnessError(report.witness, report.criterion)
            on_edges.update(p.first_edge for p in paths)

        pins: Dict[str, Dict[str, int]] = {}
        for node in dag.names:
            if node in sources:
                continue
            pins[node] = {
                p: (on_value[p] if (p, node) in on_edges else off_value[p])
                for p in dag.parents(node) if p in sources
            }
        return pins

    def path_specific(self, intervention: PathIntervention, y: Mapping[str, int]) -> float:
        """
        ``P_pi(y)`` by the edge g-formula.

        Raises:
            RecantingWitnessError: If the path set is not identifiable
        """
        y = self.dag.validate_assignment(y)
        pins = self._path_pins(intervention, tuple(y))
        tensor = self.pinned_product(intervention.sources, pins, self.relevant_nodes(y, intervention.sources))
        return self._sum_at(tensor, y)

    def path_specific_distribution(self, intervention: PathIntervention, target: str) -> np.ndarray:
        """Vector ``P_pi(target = x)`` over all values x."""
        pins = self._path_pins(intervention, (target,))
        relevant = self.relevant_nodes((target,), intervention.sources)
        tensor = self.pinned_product(intervention.sources, pins, relevant)
        return self._distribution_of(tensor, target)

    def joint_table(self, normalize: bool = False) -> JointTable:
        """
        The full joint as a dense table in canonical node order.

        Args:
            normalize: Rescale to sum 1 and record the correction
        """
        table = self.pinned_product()
        delta = 0.0
        if normalize:
            total = float(table.sum())
            delta = 1.0 - total
            if abs(delta) > ROW_TOLERANCE:
                logger.warning("joint_renormalized", delta=delta)
            if total > 0.0:
                table = table / total
        return JointTable(nodes=self.dag.names, table=table, renormalization_delta=delta)


class Cbn(Factorization):
    """A causal Bayesian network: a DAG plus one validated CPT per node."""

    def __init__(self, dag: CausalDag, cpts: Union[Mapping[str, Cpt], Iterable[Cpt]]):
        if isinstance(cpts, Mapping):
            cpts = list(cpts.values())

        by_child: Dict[str, Cpt] = {}
        for cpt in cpts:
            if cpt.child in by_child:
                raise InputError(f"Duplicate CPT for node '{cpt.child}'")
            by_child[cpt.child] = cpt

        for name in dag.names:
            if name not in by_child:
                raise InputError(f"Missing CPT for node '{name}'")
            if by_child[name].parents != dag.parents(name):
                raise InputError(
                    f"CPT of '{name}' lists parents {by_child[name].parents}, "
                    f"graph has {dag.parents(name)}"
                )
        extra = set(by_child) - set(dag.names)
        if extra:
            raise InputError(f"CPTs for unknown nodes: {sorted(extra)}")

        super().__init__(dag, {name: by_child[name].table for name in dag.names})
        self.cpts: Dict[str, Cpt] = {name: by_child[name] for name in dag.names}

    @classmethod
    def from_tables(cls, dag: CausalDag, tables: Mapping[str, np.ndarray]) -> "Cbn":
        return cls(dag, [Cpt(name, dag.parents(name), tables[name]) for name in dag.names])

    @property
    def strictly_positive(self) -> bool:
        return all(cpt.strictly_positive for cpt in self.cpts.values())

    def require_positive(self) -> None:
        """Raise ``PositivityError`` naming the first zero CPT cell."""
        for name, cpt in self.cpts.items():
            cell = cpt.first_zero_cell()
            if cell is not None:
                parents = dict(zip(cpt.parents, cell[:-1]))
                where = f"{name}={self.dag.node(name).value_labels[cell[-1]]}"
                if parents:
                    where += f" | {self.dag.format_assignment(parents)}"
                raise PositivityError(f"CPT entry P({where}) is zero", cell=where)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cbn):
            return NotImplemented
        return self.dag == other.dag and self.cpts == other.cpts

    __hash__ = None

    def __repr__(self) -> str:
        return f"Cbn({self.dag!r})"


# === EFFECT MEASURES

def _check_pair(s2: Mapping[str, int], s1: Mapping[str, int]) -> None:
    if set(s2) != set(s1):
        raise InputError("Compared interventions must assign the same nodes")


def total_effect(model: Factorization, y: Mapping[str, int], s2: Mapping[str, int], s1: Mapping[str, int]) -> float:
    """``TE(s2, s1) = P(y | do(s2)) - P(y | do(s1))``."""
    _check_pair(s2, s1)
    return model.interventional(s2, y) - model.interventional(s1, y)


def path_specific_effect(model: Factorization,
                         pi: Iterable[DirectedPath],
                         y: Mapping[str, int],
                         s2: Mapping[str, int],
                         s1: Mapping[str, int]) -> float:
    """
    Multiplicative path-specific effect ``P_pi(y | s2, s1) / P(y | do(s1))``.

    Raises:
        PositivityError: If ``P(y | do(s1)) = 0``
        RecantingWitnessError: If ``pi`` is not identifiable
    """
    _check_pair(s2, s1)
    denominator = model.interventional(s1, y)
    if denominator <= 0.0:
        raise PositivityError(
            f"P({model.dag.format_assignment(y)} | do({model.dag.format_assignment(s1)})) is zero",
            cell=model.dag.format_assignment({**s1, **y}),
        )
    numerator = model.path_specific(PathIntervention(frozenset(pi), on_value=s2, off_value=s1), y)
    return numerator / denominator


# === SAMPLING AND ESTIMATION

def sample(model: Factorization, n: int, seed: Optional[int] = None) -> SampleSet:
    """
    Draw ``n`` complete assignments by ancestral sampling.

    Nodes are drawn in canonical order by inverse-CDF lookup on uniform draws
    from ``numpy.random.default_rng(seed)``; equal seeds give equal samples.
    """
    if n < 1:
        raise InputError(f"Sample size must be at least 1, got {n}")

    dag = model.dag
    rng = np.random.default_rng(seed)
    columns = {name: i for i, name in enumerate(dag.names)}
    values = np.zeros((n, len(dag.names)), dtype=np.int64)

    for name in dag.names:
        table = model.table(name)
        card = dag.cardinality(name)
        parents = dag.parents(name)
        if parents:
            probs = table[tuple(values[:, columns[p]] for p in parents)]
        else:
            probs = np.broadcast_to(table, (n, card))
        cdf = np.cumsum(probs, axis=1)
        draws = rng.random(n)
        values[:, columns[name]] = np.minimum((draws[:, None] >= cdf).sum(axis=1), card - 1)

    logger.debug("samples_drawn", n=n, seed=seed)
    return SampleSet(nodes=dag.names, values=values, seed=seed)


def mle_estimate(dag: CausalDag, samples: SampleSet, smoothing: float = 0.0) -> Cbn:
    """
    Maximum-likelihood CPTs from complete data, with optional additive smoothing.

    Parent configurations with no data and no smoothing get a uniform row,
    recorded in ``Cpt.fallback_rows`` and logged as a warning.
    """
    if smoothing < 0.0:
        raise InputError(f"Smoothing must be non-negative, got {smoothing}")
    missing = [name for name in dag.names if name not in samples.nodes]
    if missing:
        raise InputError(f"Samples are missing nodes: {missing}")

    columns = {name: samples.values[:, samples.nodes.index(name)] for name in dag.names}
    for name, column in columns.items():
        if column.size and (column.min() < 0 or column.max() >= dag.cardinality(name)):
            raise InputError(f"Sample values out of range for node '{name}'")

    cpts = []
    for name in dag.names:
        parents = dag.parents(name)
        card = dag.cardinality(name)
        counts = np.zeros(dag.cardinalities(parents + (name,)), dtype=float)
        np.add.at(counts, tuple(columns[p] for p in parents + (name,)), 1.0)

        totals = counts.sum(axis=-1, keepdims=True) + smoothing * card
        empty = totals[..., 0] <= 0.0
        table = np.where(totals > 0.0, (counts + smoothing) / np.where(totals > 0.0, totals, 1.0), 1.0 / card)

        fallback = tuple(tuple(int(i) for i in row) for row in np.argwhere(empty)) if parents else ()
        if fallback:
            logger.warning("unseen_parent_configurations", node=name, rows=len(fallback))
        cpts.append(Cpt(name, parents, table, fallback_rows=fallback))

    return Cbn(dag, cpts)
