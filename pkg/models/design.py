from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class TrialDesign(BaseModel):
    """Stepped-wedge layout: which group each cluster belongs to and when it crosses over."""
    model_config = ConfigDict(frozen=True)

    n_clusters: int = Field(gt=0, description="Number of clusters I")
    n_steps: int = Field(gt=0, description="Number of steps J; the trial has J+1 periods")
    period_length: float = Field(default=0.5, gt=0, description="Period length in years")
    allocation: List[int] = Field(description="Group g in 1..J for each cluster, in cluster order")

    @model_validator(mode="after")
    def check_allocation(self):
        if len(self.allocation) != self.n_clusters:
            raise ValueError(f"allocation has {len(self.allocation)} entries for {self.n_clusters} clusters")
        bad = [g for g in self.allocation if not 1 <= g <= self.n_steps]
        if bad:
            raise ValueError(f"groups must lie in 1..{self.n_steps}, got {sorted(set(bad))}")
        return self

    @property
    def n_periods(self) -> int:
        return self.n_steps + 1

    @property
    def exposure(self) -> np.ndarray:
        """Boolean matrix x[i, j]; cluster i is exposed from period allocation[i] onwards."""
        periods = np.arange(self.n_periods)
        return periods[np.newaxis, :] >= np.asarray(self.allocation)[:, np.newaxis]

    def group_sizes(self) -> List[int]:
        counts = np.bincount(np.asarray(self.allocation), minlength=self.n_steps + 1)
        return counts[1:].tolist()
