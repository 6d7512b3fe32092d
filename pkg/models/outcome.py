from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .cohort import CohortMode

# Secular trend, one entry per period j = 0..8
SECULAR_TREND = (0.0, 0.0, -4.0, -4.0, -4.0, -5.0, -5.0, -5.0, -6.0)

OBSERVATION_COLUMNS = [
    "cluster",
    "period",
    "participant",
    "exposed",
    "age",
    "baseline_age",
    "widowed",
    "baseline_widowed",
    "outcome",
]


class ScenarioName(str, Enum):
    A = "a"
    B = "b"
    C = "c"
    D = "d"


class AgeResponse(str, Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


class NonlinearForm(str, Enum):
    QUADRATIC = "quadratic"
    HINGE = "hinge"


class ScenarioConfig(BaseModel):
    """Data-generating parameters for one scenario. Defaults reproduce the standard scenarios."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(default="custom", description="Scenario identifier used in result keys")
    intercept: float = Field(default=70.0, description="Intercept mu (SF-12 PCS points)")
    theta: float = Field(default=0.0, description="Intervention effect (points)")
    beta_age: float = Field(default=-0.25, description="Linear age effect (points per year)")
    beta_widowed: float = Field(default=-5.0, description="Widowhood effect (points)")
    secular_trend: List[float] = Field(default_factory=lambda: list(SECULAR_TREND),
                                       description="Period effects beta_j, j = 0..J")
    age_response: AgeResponse = AgeResponse.LINEAR
    nonlinear_form: NonlinearForm = NonlinearForm.HINGE
    nonlinear_coefficient: float = Field(default=-0.02, description="Coefficient of the quadratic age term")
    nonlinear_center: float = Field(default=60.0, description="Age at which the quadratic term is anchored")
    sigma_c2: float = Field(default=10.0, ge=0, description="Between-cluster variance")
    sigma_d2: float = Field(default=10.0, ge=0, description="Between-participant variance")
    sigma_e2: float = Field(default=20.0, ge=0, description="Residual variance")
    cohort_mode: CohortMode = CohortMode.CLOSED
    attrition_rate: float = Field(default=0.0, ge=0, lt=1, description="Share of the oldest participants replaced per period")
    widowhood_hazard: float = Field(default=0.05, ge=0, le=1, description="Per-period probability of becoming widowed")
    baseline_age_range: Tuple[float, float] = (18.0, 102.0)
    joiner_age_range: Tuple[float, float] = (18.0, 96.0)

    @field_validator("secular_trend")
    @classmethod
    def check_reference_period(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("secular trend needs at least the period 0 entry")
        if value[0] != 0.0:
            raise ValueError("secular trend must be 0 at period 0")
        return value

    def trend_for(self, n_steps: int) -> List[float]:
        if len(self.secular_trend) < n_steps + 1:
            raise ValueError(
                f"secular trend has {len(self.secular_trend)} entries, {n_steps + 1} needed for J={n_steps}"
            )
        return list(self.secular_trend[: n_steps + 1])


class ScenarioOverrides(BaseModel):
    """Optional replacements for any ScenarioConfig field, applied after the preset."""
    model_config = ConfigDict(extra="forbid")

    intercept: Optional[float] = None
    beta_age: Optional[float] = None
    beta_widowed: Optional[float] = None
    secular_trend: Optional[List[float]] = None
    age_response: Optional[AgeResponse] = None
    nonlinear_form: Optional[NonlinearForm] = None
    nonlinear_coefficient: Optional[float] = None
    nonlinear_center: Optional[float] = None
    sigma_c2: Optional[float] = Field(default=None, ge=0)
    sigma_d2: Optional[float] = Field(default=None, ge=0)
    sigma_e2: Optional[float] = Field(default=None, ge=0)
    cohort_mode: Optional[CohortMode] = None
    attrition_rate: Optional[float] = Field(default=None, ge=0, lt=1)
    widowhood_hazard: Optional[float] = Field(default=None, ge=0, le=1)
    baseline_age_range: Optional[Tuple[float, float]] = None
    joiner_age_range: Optional[Tuple[float, float]] = None
