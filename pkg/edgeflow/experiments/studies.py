"""
Experiment harnesses on the synthetic bail network.

- MSE study: fit the CPT of J with and without the scaling factor over the
  625-point strength grid.
- Finite-data study: distance between the edge unfairness of the true
  network and of networks estimated from growing samples.
- Correlation probe: how the interventional probability and the edge flow
  of R -> J react to one score entry.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import stats

from edgeflow.config.schema import FitConfig, StudyConfig
from edgeflow.core.distribution import Cbn, SampleSet, mle_estimate, sample
from edgeflow.core.fit import fit_cpt, fit_network
from edgeflow.core.flow import edge_flow
from edgeflow.core.graph import CausalDag
from edgeflow.core.unfairness import edge_unfairness_report
from edgeflow.errors import PositivityError
from edgeflow.experiments.generator import (
    BAIL_ROOT_MARGINALS,
    ScoreTable,
    ThetaCombination,
    ThetaParams,
    bail_graph,
    generate_cpts,
    neutral_scores,
    theta_grid,
)
from edgeflow.experiments.pool import JobPool

logger = structlog.get_logger(__name__)


def job_seed(*key: int) -> int:
    """A seed for one job, derived from the master seed and the job's coordinates."""
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentRecord:
    """
    Result of one grid combination of the MSE study.

    Attributes:
        combo_id: Grid index
        theta_j: Strengths into J
        theta_t: Strengths into T
        e_j: MSE of the CPT of J fitted on scaled flows
        e_j_unscaled: MSE fitted on unscaled flows
        delta_j: Relative MSE decrease ``(e' - e) / e'``; None when ``e' = 0``
        weights: Scaled-fit weights by column label
        weights_unscaled: Unscaled-fit weights by column label
    """
    combo_id: int
    theta_j: Dict[str, float]
    theta_t: Dict[str, float]
    e_j: float
    e_j_unscaled: float
    delta_j: Optional[float]
    weights: Dict[str, float] = field(default_factory=dict)
    weights_unscaled: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class MseSummary:
    """Aggregates of an MSE study."""
    combos: int
    median_e_j: float
    median_e_j_unscaled: float
    median_delta_j: float
    negative_delta_fraction: float
    median_theta_gap: float


@dataclass(frozen=True)
class ThetaTrackingRow:
    """Fitted weight of R -> J across the grid points sharing one strength of R -> J."""
    theta: float
    count: int
    weight_min: float
    weight_median: float
    weight_max: float


@dataclass(frozen=True)
class FiniteDataCurve:
    """
    Edge-unfairness distance against sample size for one ground truth and replicate.

    Attributes:
        dist_id: Ground-truth index
        replicate: Sampling replicate index
        seed: Seed of the replicate's first sample
        points: ``(m, E)`` pairs with m strictly increasing
        smoothed: Sample sizes whose estimate needed the fallback pseudo-count
    """
    dist_id: int
    replicate: int
    seed: int
    points: Tuple[Tuple[int, float], ...]
    smoothed: Tuple[int, ...] = ()

    def __post_init__(self):
        sizes = [m for m, _ in self.points]
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("Sample sizes must be strictly increasing")
        if any(distance < 0.0 for _, distance in self.points):
            raise ValueError("Distances cannot be negative")


@dataclass(frozen=True)
class ProbeRow:
    score: float
    p_do: float
    flow: float


@dataclass(frozen=True)
class ProbeResult:
    """Correlation probe sweep with least-squares slopes of both series."""
    rows: Tuple[ProbeRow, ...]
    slope_do: float
    slope_flow: float

    @property
    def slope_ratio(self) -> float:
        return self.slope_flow / self.slope_do if self.slope_do else float("inf")


# === MSE STUDY

def _mse_job(combo: ThetaCombination, base_theta: ThetaParams, scores: ScoreTable,
             fit_config: FitConfig) -> ExperimentRecord:
    cbn = generate_cpts(bail_graph(), combo.apply(base_theta), scores, BAIL_ROOT_MARGINALS)
    scaled = fit_cpt(cbn, "J", fit_config.model_copy(update={"use_scaling": True}))
    unscaled = fit_cpt(cbn, "J", fit_config.model_copy(update={"use_scaling": False}))

    e, e_prime = scaled.mse, unscaled.mse
    delta = (e_prime - e) / e_prime if e_prime > 0.0 else None
    return ExperimentRecord(
        combo_id=combo.combo_id,
        theta_j=dict(combo.theta_j),
        theta_t=dict(combo.theta_t),
        e_j=e,
        e_j_unscaled=e_prime,
        delta_j=delta,
        weights=dict(zip(scaled.column_labels(), scaled.weights().tolist())),
        weights_unscaled=dict(zip(unscaled.column_labels(), unscaled.weights().tolist())),
    )


def run_mse_study(config: Optional[StudyConfig] = None,
                  threads: Optional[int] = None,
                  combos: Optional[Sequence[ThetaCombination]] = None) -> List[ExperimentRecord]:
    """
    Fit the CPT of J with and without scaling for every grid combination.

    Args:
        config: Study settings (seed, solver)
        threads: Worker threads
        combos: Subset of the grid to run (default: all 625 points)
    """
    config = config or StudyConfig()
    dag = bail_graph()
    scores = ScoreTable.random(dag, np.random.default_rng(config.seed))
    base_theta = ThetaParams.uniform(dag)
    combos = list(combos) if combos is not None else theta_grid(dag)

    jobs = [
        (combo.combo_id,
         (combo, base_theta, scores, config.fit.model_copy(update={"seed": job_seed(config.seed, combo.combo_id)})))
        for combo in combos
    ]
    with JobPool(max_workers=threads) as pool:
        records = pool.map(_mse_job, jobs)

    logger.info("mse_study_finished", combos=len(records), seed=config.seed)
    return records


def summarize_mse_study(records: Sequence[ExperimentRecord]) -> MseSummary:
    deltas = np.array([r.delta_j for r in records if r.delta_j is not None])
    gaps = np.array([abs(r.weights["R"] - r.theta_j["R"]) for r in records])
    return MseSummary(
        combos=len(records),
        median_e_j=float(np.median([r.e_j for r in records])),
        median_e_j_unscaled=float(np.median([r.e_j_unscaled for r in records])),
        median_delta_j=float(np.median(deltas)) if deltas.size else float("nan"),
        negative_delta_fraction=float(np.mean(deltas < 0.0)) if deltas.size else float("nan"),
        median_theta_gap=float(np.median(gaps)),
    )


def theta_tracking(records: Sequence[ExperimentRecord]) -> List[ThetaTrackingRow]:
    """Spread of the fitted R -> J weight for every strength level of R -> J."""
    groups: Dict[float, List[float]] = {}
    for record in records:
        groups.setdefault(round(record.theta_j["R"], 12), []).append(record.weights["R"])
    return [
        ThetaTrackingRow(theta=theta, count=len(weights), weight_min=float(np.min(weights)),
                         weight_median=float(np.median(weights)), weight_max=float(np.max(weights)))
        for theta, weights in sorted(groups.items())
    ]


# === FINITE-DATA STUDY

def _unfairness_vector(model: Cbn, config: FitConfig) -> np.ndarray:
    """Edge unfairness of every unfair edge, in sorted edge order."""
    report = edge_unfairness_report(fit_network(model, config))
    return np.array([report.values[edge] for edge in sorted(model.dag.unfair_edges)])


def _estimated_unfairness(dag: CausalDag, samples: SampleSet, config: FitConfig,
                          fallback_smoothing: float) -> Tuple[np.ndarray, bool]:
    """Use the plain estimate; re-estimate with the fallback pseudo-count if a flow hits a zero."""
    try:
        return _unfairness_vector(mle_estimate(dag, samples), config), False
    except PositivityError as e:
        logger.warning("estimate_smoothed", n=len(samples), cell=e.cell, smoothing=fallback_smoothing)
    return _unfairness_vector(mle_estimate(dag, samples, fallback_smoothing), config), True


def _finite_job(dist_id: int, config: StudyConfig) -> List[FiniteDataCurve]:
    dag = bail_graph()
    rng = np.random.default_rng([config.seed, dist_id])
    theta = ThetaParams.random(dag, rng, config.finite_theta_concentration)
    scores = ScoreTable.random(dag, rng, config.finite_score_concentration)
    truth = generate_cpts(dag, theta, scores, BAIL_ROOT_MARGINALS)
    fit_config = config.fit.model_copy(update={"row_weighting": config.finite_row_weighting})
    reference = _unfairness_vector(truth, fit_config)

    curves = []
    for replicate in range(config.replicates):
        points, smoothed = [], []
        seeds = [job_seed(config.seed, dist_id, replicate, k) for k in range(len(config.sample_sizes))]
        for m, seed in zip(config.sample_sizes, seeds):
            estimate, was_smoothed = _estimated_unfairness(dag, sample(truth, m, seed), fit_config,
                                                           config.fallback_smoothing)
            points.append((m, float(np.linalg.norm(reference - estimate))))
            if was_smoothed:
                smoothed.append(m)
        curves.append(FiniteDataCurve(dist_id=dist_id, replicate=replicate, seed=seeds[0],
                                      points=tuple(points), smoothed=tuple(smoothed)))
        logger.debug("finite_data_curve", dist_id=dist_id, replicate=replicate, points=points)
    return curves


def run_finite_data_study(config: Optional[StudyConfig] = None,
                          threads: Optional[int] = None) -> List[FiniteDataCurve]:
    """
    For random ground truths, measure ``||U(P) - U(P^m)||_2`` as m grows, where
    U is the vector of edge unfairness over the unfair edges.

    Ground-truth strengths and scores are drawn per distribution with the
    configured Dirichlet concentrations; samples use
    per-replicate, per-size seeds derived from the master seed. Every fit uses
    ``finite_row_weighting``. Estimates are plain maximum likelihood unless a
    flow of the estimate hits a zero, in which case that sample is
    re-estimated with ``fallback_smoothing``.
    """
    config = config or StudyConfig()
    jobs = [(dist_id, (dist_id, config)) for dist_id in range(config.true_distributions)]
    with JobPool(max_workers=threads) as pool:
        results = pool.map(_finite_job, jobs)

    curves = [curve for batch in results for curve in batch]
    logger.info("finite_data_study_finished", curves=len(curves), seed=config.seed)
    return curves


# === CORRELATION PROBE

def input_correlation_probe(values: Optional[Sequence[float]] = None,
                            seed: int = 0,
                            config: Optional[StudyConfig] = None) -> ProbeResult:
    """
    Sweep the score of ``R=0 -> J=1`` and record ``P(J=1 | do(R=0))`` and
    the R -> J flow at ``(R=0, J=1)``.

    Without explicit values the sweep covers [0, 1] in ``config.probe_points``
    evenly spaced steps.

    All strengths into J are equal and every other score row into J is
    uniform, so J depends on R through the swept row alone.
    """
    if values is None:
        values = np.linspace(0.0, 1.0, (config or StudyConfig()).probe_points)
    values = np.asarray(values, dtype=float)
    dag = bail_graph()
    theta = ThetaParams.uniform(dag)
    scores = neutral_scores(dag, ScoreTable.random(dag, np.random.default_rng(seed)), "J")

    rows = []
    for value in values:
        swept = scores.with_row(("R", "J"), 0, (1.0 - value, value))
        cbn = generate_cpts(dag, theta, swept, BAIL_ROOT_MARGINALS)
        p_do = cbn.interventional({"R": 0}, {"J": 1})
        flow = edge_flow(cbn, ("R",), "J").value({"R": 0}, 1)
        rows.append(ProbeRow(score=float(value), p_do=p_do, flow=flow))

    slope_do = stats.linregress(values, [row.p_do for row in rows]).slope
    slope_flow = stats.linregress(values, [row.flow for row in rows]).slope
    logger.info("correlation_probe_finished", slope_do=slope_do, slope_flow=slope_flow)
    return ProbeResult(rows=tuple(rows), slope_do=float(slope_do), slope_flow=float(slope_flow))
