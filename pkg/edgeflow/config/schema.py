"""
Configuration schema for edgeflow.

Solver and study settings are immutable pydantic models, so invalid values
fail at construction and a configuration can be passed between threads.
"""

from typing import Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class FitConfig(_Frozen):
    """
    Settings for fitting linear CPT models.

    Attributes:
        tolerance: Stop when the objective decreases by less than this
        max_iterations: Iteration cap per restart
        restarts: Number of random starting points on the simplex
        use_scaling: Use scaled edge flows (the unscaled variant is for comparison)
        row_weighting: ``"uniform"`` weighs every CPT row equally; ``"parent_mass"``
            weighs a row by the probability of its parent configuration
        seed: Seed for the starting points
    """
    tolerance: float = Field(default=1e-10, gt=0.0)
    max_iterations: int = Field(default=10_000, ge=1)
    restarts: int = Field(default=5, ge=1)
    use_scaling: bool = True
    row_weighting: Literal["uniform", "parent_mass"] = "uniform"
    seed: int = 0


class DebiasConfig(_Frozen):
    """
    Settings for discrimination removal.

    Attributes:
        utility_weight: Weight of the squared joint distance in the objective
        tolerance: Stop when the objective decreases by less than this
        max_iterations: Iteration cap per restart
        restarts: Starting points; the first is always the fitted model
        seed: Seed for additional starting points
        fit: Settings for the initial fit
    """
    utility_weight: float = Field(default=1.0, ge=0.0)
    tolerance: float = Field(default=1e-12, gt=0.0)
    max_iterations: int = Field(default=20_000, ge=1)
    restarts: int = Field(default=1, ge=1)
    seed: int = 0
    fit: FitConfig = FitConfig()


class PriorityConfig(_Frozen):
    """Weights of unfairness and potential in the priority score."""
    unfairness_weight: float = Field(default=0.5, ge=0.0)
    potential_weight: float = Field(default=0.5, ge=0.0)


class StudyConfig(_Frozen):
    """
    Settings for the synthetic bail studies.

    Attributes:
        seed: Master seed; every job derives its own stream from it
        sample_sizes: Data sizes for the finite-data study, strictly increasing
        true_distributions: Number of random ground-truth networks
        replicates: Sampling replicates per ground truth
        probe_points: Number of values in the correlation probe sweep
        fallback_smoothing: Pseudo-count for re-estimating a sample whose plain
            estimate has a zero interventional probability
        finite_row_weighting: Row weighting of every fit in the finite-data study
        finite_theta_concentration: Dirichlet concentration of the random ground-truth strengths
        finite_score_concentration: Dirichlet concentration of the random ground-truth score rows
        fit: Solver settings used throughout
    """
    seed: int = 0
    sample_sizes: Tuple[int, ...] = (100, 1_000, 10_000)
    true_distributions: int = Field(default=5, ge=1)
    replicates: int = Field(default=3, ge=1)
    probe_points: int = Field(default=11, ge=2)
    fallback_smoothing: float = Field(default=1.0, gt=0.0)
    finite_row_weighting: Literal["uniform", "parent_mass"] = "parent_mass"
    finite_theta_concentration: float = Field(default=4.0, gt=0.0)
    finite_score_concentration: float = Field(default=0.5, gt=0.0)
    fit: FitConfig = FitConfig()

    @field_validator("sample_sizes")
    @classmethod
    def _increasing(cls, sizes: Tuple[int, ...]) -> Tuple[int, ...]:
        if not sizes:
            raise ValueError("sample_sizes cannot be empty")
        if any(size <= 0 for size in sizes):
            raise ValueError("sample sizes must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sample sizes must be strictly increasing")
        return sizes
