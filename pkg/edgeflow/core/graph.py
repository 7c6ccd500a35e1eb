"""
Causal DAG representation for edgeflow.

This module defines the node and path value types and the immutable
``CausalDag``: a directed acyclic graph over discrete nodes with a set of
sensitive nodes. Edges leaving a sensitive node are the unfair edges.

The DAG answers the structural queries the rest of the package relies on:
canonical topological order, directed path enumeration, d-separation (by
Bayes-ball reachability or by brute-force trail enumeration) and the
recanting-witness test that decides whether a path-specific distribution
can be computed with the edge g-formula.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import structlog

from edgeflow.errors import GraphCycleError, IncompleteAssignmentError, InputError, UnknownNodeError

logger = structlog.get_logger(__name__)

Edge = Tuple[str, str]
Assignment = Dict[str, int]


def edge_name(edge: Edge) -> str:
    """Render an edge as ``"A->B"``."""
    return f"{edge[0]}->{edge[1]}"


@dataclass(frozen=True)
class NodeSpec:
    """
    A discrete node.

    Attributes:
        name: Node identifier
        cardinality: Number of values (at least 2)
        value_labels: One distinct label per value; the label's position is the
            value's index. Defaults to ``"0"``, ``"1"``, ...
    """
    name: str
    cardinality: int
    value_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise InputError("Node name cannot be empty")

        if self.cardinality < 2:
            raise InputError(f"Node '{self.name}' needs at least 2 values, got {self.cardinality}")

        labels = tuple(str(label) for label in self.value_labels)
        if not labels:
            labels = tuple(str(i) for i in range(self.cardinality))

        if len(labels) != self.cardinality:
            raise InputError(
                f"Node '{self.name}' has cardinality {self.cardinality} "
                f"but {len(labels)} labels"
            )

        if len(set(labels)) != len(labels):
            raise InputError(f"Node '{self.name}' has duplicate value labels: {labels}")

        object.__setattr__(self, "value_labels", labels)

    def index_of(self, label: str) -> int:
        """Return the value index of ``label``."""
        try:
            return self.value_labels.index(str(label))
        except ValueError:
            raise InputError(f"Node '{self.name}' has no value labelled '{label}'") from None


@dataclass(frozen=True)
class DirectedPath:
    """A directed path, stored as its node sequence (at least one edge)."""
    nodes: Tuple[str, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if len(nodes) < 2:
            raise InputError(f"A directed path needs at least two nodes, got {nodes}")
        if len(set(nodes)) != len(nodes):
            raise InputError(f"A directed path cannot repeat nodes: {nodes}")
        object.__setattr__(self, "nodes", nodes)

    @property
    def source(self) -> str:
        return self.nodes[0]

    @property
    def target(self) -> str:
        return self.nodes[-1]

    @property
    def interior(self) -> Tuple[str, ...]:
        return self.nodes[1:-1]

    @property
    def first_edge(self) -> Edge:
        return (self.nodes[0], self.nodes[1])

    def edges(self) -> Tuple[Edge, ...]:
        return tuple(zip(self.nodes[:-1], self.nodes[1:]))

    def contains_segment(self, segment: Sequence[str]) -> bool:
        """True if ``segment`` occurs in this path as a contiguous run of nodes."""
        segment = tuple(segment)
        size = len(segment)
        return any(self.nodes[i:i + size] == segment for i in range(len(self.nodes) - size + 1))

    def __str__(self) -> str:
        return "->".join(self.nodes)


@dataclass(frozen=True)
class WitnessReport:
    """
    Outcome of the recanting-witness test for a path set.

    Attributes:
        witness: The recanting witness, or None when the path set is identifiable
        s_pi: Children of the sources reached by the first edge of an included path
        s_tilde_pi: Children of the sources reached by the first edge of an excluded path
        criterion: ``"segment"`` when found by the three-condition search,
            ``"edge"`` when only the on/off overlap of a source edge exposes it
    """
    witness: Optional[str]
    s_pi: FrozenSet[str]
    s_tilde_pi: FrozenSet[str]
    criterion: Optional[str] = None

    @property
    def identifiable(self) -> bool:
        return self.witness is None

    @property
    def overlap(self) -> FrozenSet[str]:
        return self.s_pi & self.s_tilde_pi


class CausalDag:
    """
    Immutable directed acyclic graph with sensitive-node annotation.

    Node order everywhere (``names``, joint table axes) is the canonical
    topological order: a lexicographic topological sort, so ties are broken
    by node name. Parent tuples follow the same order.
    """

    def __init__(self,
                 nodes: Iterable[NodeSpec],
                 edges: Iterable[Edge],
                 sensitive: Iterable[str] = ()):
        """
        Build and validate a DAG.

        Args:
            nodes: Node specifications
            edges: Directed (parent, child) pairs
            sensitive: Names of sensitive nodes

        Raises:
            InputError: On duplicate nodes or unknown sensitive nodes
            UnknownNodeError: If an edge names a missing node
            GraphCycleError: If the edges contain a directed cycle
        """
        specs: Dict[str, NodeSpec] = {}
        for spec in nodes:
            if spec.name in specs:
                raise InputError(f"Duplicate node '{spec.name}'")
            specs[spec.name] = spec

        graph = nx.DiGraph()
        graph.add_nodes_from(specs)
        for parent, child in edges:
            for endpoint in (parent, child):
                if endpoint not in specs:
                    raise UnknownNodeError(f"Edge {parent}->{child} names unknown node '{endpoint}'")
            if parent == child:
                raise GraphCycleError(f"Self-loop on node '{parent}'")
            graph.add_edge(parent, child)

        if not nx.is_directed_acyclic_graph(graph):
            cycle = " -> ".join(u for u, _ in nx.find_cycle(graph))
            raise GraphCycleError(f"Edges contain a directed cycle: {cycle}")

        sensitive_set = frozenset(sensitive)
        unknown = sensitive_set - set(specs)
        if unknown:
            raise UnknownNodeError(f"Unknown sensitive nodes: {sorted(unknown)}")

        self._graph = graph
        self._order: Tuple[str, ...] = tuple(nx.lexicographical_topological_sort(graph))
        self._position = {name: i for i, name in enumerate(self._order)}
        self._specs = {name: specs[name] for name in self._order}
        self._sensitive = sensitive_set
        self._edges = frozenset(graph.edges())
        self._parents = {
            name: tuple(sorted(graph.predecessors(name), key=self._position.__getitem__))
            for name in self._order
        }
        self._children = {
            name: tuple(sorted(graph.successors(name), key=self._position.__getitem__))
            for name in self._order
        }

    # === BASIC STRUCTURE

    @property
    def names(self) -> Tuple[str, ...]:
        """Node names in canonical topological order."""
        return self._order

    @property
    def nodes(self) -> Tuple[NodeSpec, ...]:
        return tuple(self._specs.values())

    @property
    def edges(self) -> FrozenSet[Edge]:
        return self._edges

    @property
    def sensitive(self) -> FrozenSet[str]:
        return self._sensitive

    @property
    def unfair_edges(self) -> FrozenSet[Edge]:
        """Edges whose source is a sensitive node."""
        return frozenset(edge for edge in self._edges if edge[0] in self._sensitive)

    def node(self, name: str) -> NodeSpec:
        self._check_node(name)
        return self._specs[name]

    def cardinality(self, name: str) -> int:
        return self.node(name).cardinality

    def cardinalities(self, names: Sequence[str]) -> Tuple[int, ...]:
        return tuple(self.cardinality(name) for name in names)

    def parents(self, name: str) -> Tuple[str, ...]:
        self._check_node(name)
        return self._parents[name]

    def children(self, name: str) -> Tuple[str, ...]:
        self._check_node(name)
        return self._children[name]

    def unfair_parents(self, name: str) -> Tuple[str, ...]:
        return tuple(p for p in self.parents(name) if p in self._sensitive)

    def fair_parents(self, name: str) -> Tuple[str, ...]:
        return tuple(p for p in self.parents(name) if p not in self._sensitive)

    def roots(self) -> Tuple[str, ...]:
        return tuple(name for name in self._order if not self._parents[name])

    def is_edge(self, parent: str, child: str) -> bool:
        return (parent, child) in self._edges

    def topological_order(self) -> Tuple[str, ...]:
        """Canonical topological order: every edge points from earlier to later."""
        return self._order

    def ancestors(self, name: str) -> FrozenSet[str]:
        self._check_node(name)
        return frozenset(nx.ancestors(self._graph, name))

    def descendants(self, name: str) -> FrozenSet[str]:
        self._check_node(name)
        return frozenset(nx.descendants(self._graph, name))

    def canonical(self, names: Iterable[str]) -> Tuple[str, ...]:
        """Sort node names into canonical order."""
        names = set(names)
        for name in names:
            self._check_node(name)
        return tuple(sorted(names, key=self._position.__getitem__))

    # === ASSIGNMENTS

    def validate_assignment(self, assignment: Mapping[str, int], complete: bool = False) -> Assignment:
        """
        Check node names and value ranges of an assignment.

        Args:
            assignment: Mapping node -> value index
            complete: Require every node to be assigned

        Returns:
            A plain dict copy with int values

        Raises:
            UnknownNodeError: If a node does not exist
            InputError: If a value is out of range
            IncompleteAssignmentError: If ``complete`` and some node is missing
        """
        checked: Assignment = {}
        for name, value in assignment.items():
            spec = self.node(name)
            index = int(value)
            if not 0 <= index < spec.cardinality:
                raise InputError(
                    f"Value {value} out of range for node '{name}' (cardinality {spec.cardinality})"
                )
            checked[name] = index

        if complete:
            missing = [name for name in self._order if name not in checked]
            if missing:
                raise IncompleteAssignmentError(f"Assignment is missing nodes: {missing}")

        return checked

    def domain_size(self, names: Sequence[str]) -> int:
        size = 1
        for card in self.cardinalities(names):
            size *= card
        return size

    def iter_assignments(self, names: Sequence[str]) -> Iterator[Assignment]:
        """All joint assignments of ``names``, in row-major order."""
        names = tuple(names)
        ranges = [range(card) for card in self.cardinalities(names)]
        for values in itertools.product(*ranges):
            yield dict(zip(names, values))

    def format_assignment(self, assignment: Mapping[str, int]) -> str:
        return ",".join(
            f"{name}={self.node(name).value_labels[value]}"
            for name, value in sorted(assignment.items(), key=lambda item: self._position[item[0]])
        )

    # === PATHS

    def path(self, *nodes: str) -> DirectedPath:
        """Build a ``DirectedPath`` and check that it follows existing edges."""
        path = DirectedPath(tuple(nodes))
        self.validate_path(path)
        return path

    def validate_path(self, path: DirectedPath) -> None:
        for parent, child in path.edges():
            if (parent, child) not in self._edges:
                raise InputError(f"Path {path} uses missing edge {parent}->{child}")

    def directed_paths(self, source: str, target: str) -> FrozenSet[DirectedPath]:
        """
        Enumerate every directed path from ``source`` to ``target``.

        Returns:
            Frozen set of paths, empty when ``target`` is unreachable
        """
        self._check_node(source)
        self._check_node(target)
        if source == target:
            return frozenset()
        return frozenset(
            DirectedPath(tuple(nodes)) for nodes in nx.all_simple_paths(self._graph, source, target)
        )

    def unfair_paths(self, sensitive: Iterable[str], target: str) -> FrozenSet[DirectedPath]:
        """Directed paths from the given sensitive nodes to ``target``."""
        paths = set()
        for name in sensitive:
            if name not in self._sensitive:
                raise InputError(f"Node '{name}' is not sensitive")
            paths.update(self.directed_paths(name, target))
        return frozenset(paths)

    def _paths_avoiding(self, source: str, target: str, blocked: FrozenSet[str]) -> List[Tuple[str, ...]]:
        """Directed paths from source to target whose interior avoids ``blocked``."""
        if source == target:
            return []
        return [
            tuple(nodes) for nodes in nx.all_simple_paths(self._graph, source, target)
            if not blocked.intersection(nodes[1:-1])
        ]

    # === SEPARATIONS

    def d_separated(self,
                    A: Iterable[str],
                    B: Iterable[str],
                    C: Iterable[str] = (),
                    method: str = "bayes_ball") -> bool:
        """
        Check whether ``A`` and ``B`` are d-separated given ``C``.

        Args:
            A: First node set
            B: Second node set
            C: Conditioning node set
            method: ``"bayes_ball"`` (reachability) or ``"trails"`` (enumerate every
                trail of the skeleton and test it for activity)

        Returns:
            True iff no active trail connects a node of A to a node of B given C

        Raises:
            InputError: If the sets overlap or the method is unknown
        """
        A, B, C = frozenset(A), frozenset(B), frozenset(C)
        for name in A | B | C:
            self._check_node(name)
        if A & B or A & C or B & C:
            raise InputError("Node sets for a d-separation query must be disjoint")

        if method == "bayes_ball":
            return self._dsep_bayes_ball(A, B, C)
        if method == "trails":
            return self._dsep_trails(A, B, C)
        raise InputError(f"Unknown d-separation method '{method}'")

    def d_connected(self, A: Iterable[str], B: Iterable[str], C: Iterable[str] = ()) -> bool:
        return not self.d_separated(A, B, C)

    def _dsep_bayes_ball(self, A: FrozenSet[str], B: FrozenSet[str], C: FrozenSet[str]) -> bool:
        # nodes that are in C or have a descendant in C open v-structures
        shaded = set(C)
        for node in C:
            shaded.update(nx.ancestors(self._graph, node))

        from_child, from_parent = "child", "parent"
        schedule = {(node, from_child) for node in A}
        visited = set()
        while schedule:
            node, direction = schedule.pop()
            if node in B:
                return False
            if (node, direction) in visited:
                continue
            visited.add((node, direction))

            if direction == from_child and node not in C:
                schedule.update((parent, from_child) for parent in self._parents[node])
                schedule.update((child, from_parent) for child in self._children[node])

            if direction == from_parent:
                if node in shaded:
                    schedule.update((parent, from_child) for parent in self._parents[node])
                if node not in C:
                    schedule.update((child, from_parent) for child in self._children[node])

        return True

    def _dsep_trails(self, A: FrozenSet[str], B: FrozenSet[str], C: FrozenSet[str]) -> bool:
        skeleton = self._graph.to_undirected(as_view=True)
        for a in A:
            for b in B:
                for trail in nx.all_simple_paths(skeleton, a, b):
                    if self._trail_active(trail, C):
                        return False
        return True

    def _trail_active(self, trail: Sequence[str], C: FrozenSet[str]) -> bool:
        for left, middle, right in zip(trail, trail[1:], trail[2:]):
            collider = (left, middle) in self._edges and (right, middle) in self._edges
            if collider:
                if middle not in C and not (self.descendants(middle) & C):
                    return False
            elif middle in C:
                return False
        return True

    # === IDENTIFIABILITY

    def recanting_witness(self,
                          X: Iterable[str],
                          Y: str,
                          pi: Iterable[DirectedPath]) -> WitnessReport:
        """
        Run the recanting-witness test for the path set ``pi`` from ``X`` to ``Y``.

        A node W (outside X and Y) is a witness when it lies on a path of ``pi``
        (so a segment from X to W and a segment from W to Y belong to ``pi``) and
        some other path from W to Y is not a segment of any path in ``pi``.
        When no such node exists but a child of X is entered both by an included
        and by an excluded path, that child is reported with criterion ``"edge"``:
        the edge g-formula cannot give its parent X a single value.

        Only paths whose interior avoids X are considered; intervening on X cuts
        every other path.

        Args:
            X: Source nodes
            Y: Target node
            pi: Included paths, each from a node of X to Y

        Returns:
            WitnessReport with the witness (or None), S_pi and S_tilde_pi

        Raises:
            InputError: If a path does not run from X to Y or passes through X
        """
        return _cached_witness(self, frozenset(X), Y, frozenset(pi))

    def _search_witness(self, sources: FrozenSet[str], Y: str, paths: FrozenSet[DirectedPath]) -> WitnessReport:
        for name in sources:
            self._check_node(name)
        self._check_node(Y)
        if Y in sources:
            raise InputError(f"Target '{Y}' cannot also be a source")

        for path in paths:
            self.validate_path(path)
            if path.source not in sources or path.target != Y:
                raise InputError(f"Path {path} does not run from {sorted(sources)} to '{Y}'")
            if sources.intersection(path.interior):
                raise InputError(f"Path {path} passes through an intervened source node")

        universe = set()
        for source in sorted(sources):
            universe.update(self._paths_avoiding(source, Y, sources))
        excluded = universe - {path.nodes for path in paths}

        s_pi = frozenset(path.nodes[1] for path in paths)
        s_tilde_pi = frozenset(nodes[1] for nodes in excluded)

        witness, criterion = None, None
        on_path = set()
        for path in paths:
            on_path.update(path.interior)

        for candidate in self._order:
            if candidate not in on_path:
                continue
            tails = self._paths_avoiding(candidate, Y, sources)
            if any(not any(path.contains_segment(tail) for path in paths) for tail in tails):
                witness, criterion = candidate, "segment"
                break

        if witness is None and s_pi & s_tilde_pi:
            witness = self.canonical(s_pi & s_tilde_pi)[0]
            criterion = "edge"

        report = WitnessReport(witness=witness, s_pi=s_pi, s_tilde_pi=s_tilde_pi, criterion=criterion)
        if witness is not None:
            logger.debug("recanting_witness_found", witness=witness, criterion=criterion, target=Y)
        return report

    # === HELPERS

    def _check_node(self, name: str) -> None:
        if name not in self._specs:
            raise UnknownNodeError(f"Unknown node '{name}'")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CausalDag):
            return NotImplemented
        return (self._specs == other._specs
                and self._edges == other._edges
                and self._sensitive == other._sensitive)

    def __hash__(self) -> int:
        return hash((tuple(self._specs.values()), self._edges, self._sensitive))

    def __repr__(self) -> str:
        edges = ", ".join(sorted(edge_name(edge) for edge in self._edges))
        return f"CausalDag(nodes={list(self._order)}, edges=[{edges}], sensitive={sorted(self._sensitive)})"


@lru_cache(maxsize=4096)
def _cached_witness(dag: CausalDag,
                    sources: FrozenSet[str],
                    Y: str,
                    paths: FrozenSet[DirectedPath]) -> WitnessReport:
    return dag._search_witness(sources, Y, paths)
