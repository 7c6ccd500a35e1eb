"""
Synthetic CPT generator and the bail-decision fixture.

A non-root node's CPT is a weighted sum of per-parent scores:

    P(v | pa(V)) = sum over parents A of theta[A->V] * score[A->V][a, v]

where the thetas of each node sum to 1 and every score row is a PMF, so
every CPT row is a PMF. Root marginals are supplied separately.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from edgeflow.core.distribution import Cbn, Cpt
from edgeflow.core.graph import CausalDag, Edge, NodeSpec, edge_name
from edgeflow.errors import InputError

SUM_TOLERANCE = 1e-9

BAIL_NODES = (
    NodeSpec("R", 3, ("African American", "Hispanic", "White")),
    NodeSpec("G", 3, ("Male", "Female", "Others")),
    NodeSpec("A", 2, ("Old", "Young")),
    NodeSpec("E", 2, ("Literate", "Illiterate")),
    NodeSpec("T", 2, ("Not Employed", "Employed")),
    NodeSpec("C", 2, ("Strong", "Weak")),
    NodeSpec("J", 2, ("Bail granted", "Bail rejected")),
)

BAIL_EDGES = (
    ("R", "T"), ("A", "T"), ("G", "T"),
    ("R", "E"), ("A", "E"), ("G", "E"),
    ("R", "J"), ("G", "J"), ("C", "J"), ("E", "J"), ("T", "J"),
)

BAIL_SENSITIVE = ("R", "G")

# Fixed, strictly positive root marginals.
BAIL_ROOT_MARGINALS = {
    "R": (0.35, 0.25, 0.40),
    "G": (0.48, 0.44, 0.08),
    "A": (0.42, 0.58),
    "C": (0.55, 0.45),
}

# Grid levels for the weight of R and the split of the remaining weight
# among the other parents (canonical parent order without R).
J_THETA_LEVELS = (0.1, 0.2, 0.33, 0.45, 0.6)
J_REMAINDER_PROFILES = (
    (0.25, 0.25, 0.25, 0.25),
    (0.4, 0.2, 0.2, 0.2),
    (0.2, 0.4, 0.2, 0.2),
    (0.2, 0.2, 0.4, 0.2),
    (0.2, 0.2, 0.2, 0.4),
)
T_THETA_LEVELS = (0.1, 0.2, 1.0 / 3.0, 0.45, 0.6)
T_REMAINDER_PROFILES = (
    (0.5, 0.5),
    (0.6, 0.4),
    (0.4, 0.6),
    (0.7, 0.3),
    (0.3, 0.7),
)


def bail_graph() -> CausalDag:
    """The bail-decision DAG: race and gender are sensitive."""
    return CausalDag(BAIL_NODES, BAIL_EDGES, BAIL_SENSITIVE)


@dataclass(frozen=True)
class ThetaParams:
    """Direct-influence strength of every edge; the strengths into a node sum to 1."""
    values: Dict[Edge, float]

    def validate(self, dag: CausalDag) -> None:
        missing = [edge_name(edge) for edge in dag.edges if edge not in self.values]
        if missing:
            raise InputError(f"Missing theta for edges: {sorted(missing)}")
        for edge, value in self.values.items():
            if edge not in dag.edges:
                raise InputError(f"Theta given for non-edge {edge_name(edge)}")
            if not -SUM_TOLERANCE <= value <= 1.0 + SUM_TOLERANCE:
                raise InputError(f"Theta of {edge_name(edge)} is outside [0, 1]: {value}")
        for name in dag.names:
            parents = dag.parents(name)
            if not parents:
                continue
            total = sum(self.values[(p, name)] for p in parents)
            if abs(total - 1.0) > SUM_TOLERANCE:
                raise InputError(f"Thetas into '{name}' sum to {total}, expected 1")

    def for_node(self, dag: CausalDag, name: str) -> Dict[str, float]:
        return {p: self.values[(p, name)] for p in dag.parents(name)}

    def with_node(self, name: str, weights: Mapping[str, float]) -> "ThetaParams":
        values = dict(self.values)
        values.update({(parent, name): float(w) for parent, w in weights.items()})
        return ThetaParams(values)

    @classmethod
    def uniform(cls, dag: CausalDag) -> "ThetaParams":
        values = {}
        for name in dag.names:
            parents = dag.parents(name)
            values.update({(p, name): 1.0 / len(parents) for p in parents})
        return cls(values)

    @classmethod
    def random(cls, dag: CausalDag, rng: np.random.Generator, concentration: float = 1.0) -> "ThetaParams":
        """Symmetric Dirichlet strengths per child; larger concentrations keep every edge away from 0."""
        if concentration <= 0.0:
            raise InputError(f"Concentration must be positive, got {concentration}")
        values = {}
        for name in dag.names:
            parents = dag.parents(name)
            if parents:
                draws = rng.dirichlet(np.full(len(parents), concentration))
                values.update(zip(((p, name) for p in parents), draws))
        return cls({edge: float(v) for edge, v in values.items()})


@dataclass(frozen=True)
class ScoreTable:
    """Score rows per edge: ``values[(A, V)][a]`` is a PMF over the values of V."""
    values: Dict[Edge, np.ndarray]

    def validate(self, dag: CausalDag) -> None:
        for edge in dag.edges:
            if edge not in self.values:
                raise InputError(f"Missing scores for edge {edge_name(edge)}")
            table = np.asarray(self.values[edge])
            expected = dag.cardinalities(edge)
            if table.shape != expected:
                raise InputError(f"Scores of {edge_name(edge)} have shape {table.shape}, expected {expected}")
            if np.any(table < 0.0) or np.any(np.abs(table.sum(axis=1) - 1.0) > SUM_TOLERANCE):
                raise InputError(f"Score rows of {edge_name(edge)} must be PMFs")

    def with_row(self, edge: Edge, parent_value: int, row: Sequence[float]) -> "ScoreTable":
        """Copy with one score row replaced (the row is renormalized)."""
        row = np.asarray(row, dtype=float)
        if np.any(row < 0.0) or row.sum() <= 0.0:
            raise InputError("A score row needs non-negative entries with a positive sum")
        values = {key: np.array(table) for key, table in self.values.items()}
        values[edge][parent_value] = row / row.sum()
        return ScoreTable(values)

    @classmethod
    def random(cls, dag: CausalDag, rng: np.random.Generator, concentration: float = 1.0) -> "ScoreTable":
        """Symmetric Dirichlet rows, edges in sorted order; concentrations below 1 give decisive rows."""
        if concentration <= 0.0:
            raise InputError(f"Concentration must be positive, got {concentration}")
        values = {}
        for parent, child in sorted(dag.edges):
            alpha = np.full(dag.cardinality(child), concentration)
            values[(parent, child)] = rng.dirichlet(alpha, size=dag.cardinality(parent))
        return cls(values)


def generate_cpts(dag: CausalDag,
                  theta: ThetaParams,
                  scores: ScoreTable,
                  root_marginals: Optional[Mapping[str, Sequence[float]]] = None) -> Cbn:
    """
    Build a network from influence strengths and score rows.

    Raises:
        InputError: If a constraint on theta or the scores fails, or a root
            marginal is missing
    """
    theta.validate(dag)
    scores.validate(dag)
    root_marginals = root_marginals or {}

    cpts = []
    for name in dag.names:
        parents = dag.parents(name)
        if not parents:
            if name not in root_marginals:
                raise InputError(f"Missing marginal for root node '{name}'")
            cpts.append(Cpt(name, (), np.asarray(root_marginals[name], dtype=float)))
            continue

        shape = dag.cardinalities(parents + (name,))
        table = np.zeros(shape)
        for i, parent in enumerate(parents):
            compact = [1] * len(shape)
            compact[i] = shape[i]
            compact[-1] = shape[-1]
            table = table + theta.values[(parent, name)] * np.asarray(scores.values[(parent, name)]).reshape(compact)
        cpts.append(Cpt(name, parents, table))

    return Cbn(dag, cpts)


def bail_network(theta: Optional[ThetaParams] = None,
                 scores: Optional[ScoreTable] = None,
                 seed: int = 0) -> Cbn:
    """The bail network with fixed root marginals; defaults to equal strengths and seeded scores."""
    dag = bail_graph()
    theta = theta or ThetaParams.uniform(dag)
    scores = scores or ScoreTable.random(dag, np.random.default_rng(seed))
    return generate_cpts(dag, theta, scores, BAIL_ROOT_MARGINALS)


def simplex_points(parents: Sequence[str],
                   lead: str,
                   levels: Sequence[float],
                   profiles: Sequence[Sequence[float]]) -> List[Dict[str, float]]:
    """
    Weight vectors over ``parents``: the lead parent takes each level, the
    remainder is split among the others by each profile.
    """
    others = [p for p in parents if p != lead]
    points = []
    for level in levels:
        for profile in profiles:
            if len(profile) != len(others):
                raise InputError(f"Profile {profile} does not match parents {others}")
            point = {lead: float(level)}
            point.update({p: (1.0 - level) * share for p, share in zip(others, profile)})
            points.append({p: point[p] for p in parents})
    return points


@dataclass(frozen=True)
class ThetaCombination:
    """One point of the experiment grid: strengths into J and into T."""
    combo_id: int
    theta_j: Dict[str, float] = field(default_factory=dict)
    theta_t: Dict[str, float] = field(default_factory=dict)

    def apply(self, base: ThetaParams) -> ThetaParams:
        return base.with_node("J", self.theta_j).with_node("T", self.theta_t)


def theta_grid(dag: Optional[CausalDag] = None) -> List[ThetaCombination]:
    """The 25 x 25 grid of strengths into J and T."""
    dag = dag or bail_graph()
    j_points = simplex_points(dag.parents("J"), "R", J_THETA_LEVELS, J_REMAINDER_PROFILES)
    t_points = simplex_points(dag.parents("T"), "R", T_THETA_LEVELS, T_REMAINDER_PROFILES)
    return [
        ThetaCombination(combo_id=i, theta_j=theta_j, theta_t=theta_t)
        for i, (theta_j, theta_t) in enumerate(itertools.product(j_points, t_points))
    ]


def neutral_scores(dag: CausalDag, base: ScoreTable, node: str) -> ScoreTable:
    """Copy of ``base`` with every score row into ``node`` set uniform."""
    values = {key: np.array(table) for key, table in base.values.items()}
    for parent in dag.parents(node):
        card = dag.cardinality(node)
        values[(parent, node)] = np.full((dag.cardinality(parent), card), 1.0 / card)
    return ScoreTable(values)
