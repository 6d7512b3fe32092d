from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config import settings


class VarianceComponents(BaseModel):
    """Cluster, participant and residual variances (points squared)."""
    model_config = ConfigDict(frozen=True)

    sigma_c2: float = Field(ge=0, description="Between-cluster variance")
    sigma_d2: float = Field(ge=0, description="Between-participant variance")
    sigma_e2: float = Field(ge=0, description="Residual variance")

    @property
    def ratios(self) -> Tuple[float, float]:
        return self.sigma_c2 / self.sigma_e2, self.sigma_d2 / self.sigma_e2

    def as_array(self) -> np.ndarray:
        return np.array([self.sigma_c2, self.sigma_d2, self.sigma_e2])

    def scaled(self, factor: float) -> "VarianceComponents":
        return VarianceComponents(sigma_c2=self.sigma_c2 * factor, sigma_d2=self.sigma_d2 * factor,
                                  sigma_e2=self.sigma_e2 * factor)


class SolverOptions(BaseModel):
    """Nelder-Mead multi-start options for the REML search; defaults come from SolverSettings."""
    start_points: List[float] = Field(default_factory=lambda: list(settings.solver.start_points))
    fatol: float = Field(default_factory=lambda: settings.solver.fatol, gt=0)
    xatol: float = Field(default_factory=lambda: settings.solver.xatol, gt=0)
    max_evaluations: int = Field(default_factory=lambda: settings.solver.max_evaluations, gt=0)
    log_ratio_bounds: Tuple[float, float] = Field(default_factory=lambda: tuple(settings.solver.log_ratio_bounds))
    boundary_tolerance: float = Field(default_factory=lambda: settings.solver.boundary_tolerance, ge=0)


class LmmFit(BaseModel):
    """A fitted two-random-intercept linear mixed model."""
    model_config = ConfigDict(frozen=True)

    formulation_id: int
    labels: List[str]
    estimates: List[float]
    covariance: List[List[float]]
    components: VarianceComponents
    criterion: float = Field(description="-2 REML log-likelihood at the optimum")
    converged: bool
    iterations: int = Field(description="Criterion evaluations across all starts and boundary searches")
    gradient_norm: float = Field(description="Central-difference gradient norm over the log ratios not fixed at 0")
    boundary_derivative: Optional[float] = Field(
        default=None,
        description="Smallest inward derivative of the criterion over ratios fixed at 0; None for interior solutions"
    )
    on_boundary: bool = False
    n_obs: int
    n_fixed: int
    n_clusters: int
    n_participants: int

    @property
    def beta(self) -> np.ndarray:
        return np.asarray(self.estimates)

    @property
    def cov(self) -> np.ndarray:
        return np.asarray(self.covariance)

    @property
    def standard_errors(self) -> List[float]:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None)).tolist()

    def coefficient(self, label: str) -> Tuple[float, float]:
        """Estimate and standard error of one fixed-effect column."""
        index = self.labels.index(label)
        return self.estimates[index], float(np.sqrt(max(self.covariance[index][index], 0.0)))
