from enum import Enum
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class FixedTerm(str, Enum):
    INTERCEPT = "intercept"
    EXPOSURE = "exposed"
    PERIOD = "period"
    BASELINE_AGE = "baseline_age"
    BASELINE_WIDOWED = "baseline_widowed"
    AGE = "age"
    WIDOWED = "widowed"


class RandomTerm(str, Enum):
    CLUSTER = "cluster"
    PARTICIPANT = "participant"


class ModelFormulation(BaseModel):
    """One analysis model: ordered fixed terms plus cluster and participant random intercepts."""
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=1, le=6)
    description: str
    fixed_terms: Tuple[FixedTerm, ...]
    random_terms: Tuple[RandomTerm, ...] = (RandomTerm.CLUSTER, RandomTerm.PARTICIPANT)

    @property
    def uses_period_effects(self) -> bool:
        return FixedTerm.PERIOD in self.fixed_terms


_BASE = (FixedTerm.INTERCEPT, FixedTerm.EXPOSURE)
_BASELINE = (FixedTerm.BASELINE_AGE, FixedTerm.BASELINE_WIDOWED)
_STEPWISE = (FixedTerm.AGE, FixedTerm.WIDOWED)

FORMULATIONS: Dict[int, ModelFormulation] = {
    1: ModelFormulation(id=1, description="Intervention only", fixed_terms=_BASE),
    2: ModelFormulation(id=2, description="Baseline covariate adjustment", fixed_terms=_BASE + _BASELINE),
    3: ModelFormulation(id=3, description="Step-by-step covariate adjustment", fixed_terms=_BASE + _STEPWISE),
    4: ModelFormulation(id=4, description="Fixed categorical time effects", fixed_terms=_BASE + (FixedTerm.PERIOD,)),
    5: ModelFormulation(id=5, description="Fixed categorical time effects and baseline adjustment",
                        fixed_terms=_BASE + (FixedTerm.PERIOD,) + _BASELINE),
    6: ModelFormulation(id=6, description="Fixed categorical time effects and step-by-step adjustment",
                        fixed_terms=_BASE + (FixedTerm.PERIOD,) + _STEPWISE),
}


def get_formulation(model_id: int) -> ModelFormulation:
    try:
        return FORMULATIONS[model_id]
    except KeyError:
        raise ValueError(f"Unknown model formulation {model_id}; expected one of {sorted(FORMULATIONS)}") from None


def get_formulations(model_ids: List[int]) -> List[ModelFormulation]:
    return [get_formulation(model_id) for model_id in model_ids]


class ModelMatrices(BaseModel):
    """Response, fixed-effect design and grouping codes for one formulation over one table."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    formulation_id: int
    y: np.ndarray = Field(description="Response vector, length N")
    X: np.ndarray = Field(description="Fixed-effect design, N x p")
    cluster_codes: np.ndarray = Field(description="Cluster code per row, 0..I-1")
    participant_codes: np.ndarray = Field(description="Participant code per row, 0..q_d-1, unique across clusters")
    participant_cluster: np.ndarray = Field(description="Cluster code of each participant, length q_d")
    labels: List[str]

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def n_fixed(self) -> int:
        return self.X.shape[1]

    @property
    def n_clusters(self) -> int:
        return int(self.participant_cluster.max()) + 1 if self.participant_cluster.size else 0

    @property
    def n_participants(self) -> int:
        return int(self.participant_cluster.shape[0])

    def column(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"No fixed-effect column named '{label}'") from None
