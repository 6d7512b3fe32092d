from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from .design import TrialDesign


class CohortMode(str, Enum):
    CLOSED = "closed"
    OPEN = "open"


class ParticipantTrajectory(BaseModel):
    """One participant's observed periods with age and widowhood status per period."""
    cluster: int = Field(ge=0, description="Cluster index (0-based)")
    participant: int = Field(ge=0, description="Participant index, unique within the cluster over the whole trial")
    entry_period: int = Field(ge=0)
    exit_period: Optional[int] = Field(default=None, description="Last observed period; None means observed to study end")
    ages: List[float] = Field(description="Age in years for each observed period, starting at entry")
    widowed: List[bool] = Field(description="Widowhood status for each observed period, starting at entry")

    @model_validator(mode="after")
    def check_paths(self):
        if len(self.ages) != len(self.widowed):
            raise ValueError("age and widowhood paths differ in length")
        if self.exit_period is not None and self.exit_period < self.entry_period:
            raise ValueError(f"exit period {self.exit_period} precedes entry period {self.entry_period}")
        if any(earlier and not later for earlier, later in zip(self.widowed, self.widowed[1:])):
            raise ValueError("widowhood is absorbing and cannot revert")
        return self

    @property
    def last_period(self) -> int:
        return self.entry_period + len(self.ages) - 1

    @property
    def periods(self) -> range:
        return range(self.entry_period, self.last_period + 1)

    def is_active(self, period: int) -> bool:
        return self.entry_period <= period <= self.last_period


class CohortPanel(BaseModel):
    """All participant trajectories of one simulated trial."""
    design: TrialDesign
    mode: CohortMode = CohortMode.CLOSED
    cluster_size: int = Field(gt=0)
    attrition_rate: float = Field(default=0.0, ge=0, lt=1)
    trajectories: List[ParticipantTrajectory] = Field(default_factory=list)

    def active(self, cluster: int, period: int) -> List[ParticipantTrajectory]:
        return [t for t in self.trajectories if t.cluster == cluster and t.is_active(period)]
