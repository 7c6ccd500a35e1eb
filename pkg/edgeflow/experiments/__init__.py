"""Synthetic data generation and experiment harnesses."""

from edgeflow.experiments.generator import (
    ScoreTable,
    ThetaCombination,
    ThetaParams,
    bail_graph,
    bail_network,
    generate_cpts,
    theta_grid,
)
from edgeflow.experiments.pool import JobPool, JobResult, JobStatus
from edgeflow.experiments.studies import (
    ExperimentRecord,
    FiniteDataCurve,
    ProbeResult,
    input_correlation_probe,
    run_finite_data_study,
    run_mse_study,
    summarize_mse_study,
    theta_tracking,
)

__all__ = [
    "ExperimentRecord",
    "FiniteDataCurve",
    "JobPool",
    "JobResult",
    "JobStatus",
    "ProbeResult",
    "ScoreTable",
    "ThetaCombination",
    "ThetaParams",
    "bail_graph",
    "bail_network",
    "generate_cpts",
    "input_correlation_probe",
    "run_finite_data_study",
    "run_mse_study",
    "summarize_mse_study",
    "theta_grid",
    "theta_tracking",
]
