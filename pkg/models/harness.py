"""
Pydantic models for Monte Carlo results.

Field order of ReplicateResult and ScenarioSummary is the column order of the
replicate and summary CSV files.
"""
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class ReplicateResult(BaseModel):
    """One model fitted to one simulated dataset."""
    scenario: str
    theta: float
    n_steps: int
    replicate: int
    model: int
    estimate: float
    standard_error: float
    df: float
    p_value: float
    significant: bool
    ci_lower: float
    ci_upper: float
    sigma_c2: float
    sigma_d2: float
    sigma_e2: float
    converged: bool
    df_fallback: bool = False
    error: str = ""
    wall_time: float = Field(default=0.0, description="Seconds spent fitting and testing this model")

    @property
    def cell(self):
        return self.scenario, self.theta, self.n_steps, self.model


class ScenarioSummary(BaseModel):
    """Performance of one model in one (scenario, theta, J) cell."""
    scenario: str
    theta: float
    n_steps: int
    model: int
    n_reps: int
    n_converged: int
    mean_estimate: float
    bias: float
    mc_se: float = Field(description="Monte Carlo standard error of the mean estimate")
    empirical_sd: float
    mean_model_se: float
    power: float = Field(description="Share of converged replicates rejecting theta = 0")
    median_estimate: float
    q25_estimate: float
    q75_estimate: float
    iqr_estimate: float
    mean_df: float
    coverage: float = Field(description="Share of intervals containing the true theta")


class RunStatus(str, Enum):
    COMPLETED = "completed"
    ABORTED = "aborted"


class RunManifest(BaseModel):
    """Provenance written next to the replicate and summary files."""
    config: Dict[str, Any]
    config_hash: str
    master_seed: int
    versions: Dict[str, str]
    started_at: str
    wall_time: float
    records_written: int
    status: RunStatus
    error: Optional[str] = None
    outputs: Dict[str, str] = Field(default_factory=dict)
