from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import settings
from .modelspec import FORMULATIONS
from .outcome import ScenarioName, ScenarioOverrides


class RunConfig(BaseModel):
    """Fully resolved simulation run. Defaults describe the full simulation grid."""
    model_config = ConfigDict(extra="forbid")

    scenarios: List[ScenarioName] = Field(default_factory=lambda: [ScenarioName.A], min_length=1)
    thetas: List[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0], min_length=1)
    steps: List[int] = Field(default_factory=lambda: [4, 6, 8], min_length=1, description="Numbers of steps J")
    models: List[int] = Field(default_factory=lambda: sorted(FORMULATIONS), min_length=1)
    n_reps: int = Field(default=1000, ge=1)
    master_seed: int = Field(default_factory=lambda: settings.simulation.master_seed, ge=0, lt=2 ** 64)
    workers: int = Field(default_factory=lambda: settings.simulation.workers, ge=1)
    output_dir: str = Field(default_factory=lambda: settings.simulation.output_dir)
    alpha: float = Field(default_factory=lambda: settings.inference.alpha, gt=0, lt=1)
    n_clusters: int = Field(default=48, gt=0)
    cluster_size: int = Field(default=8, gt=0)
    period_length: float = Field(default=0.5, gt=0)
    rerandomize: bool = Field(default_factory=lambda: settings.simulation.rerandomize)
    overrides: ScenarioOverrides = Field(default_factory=ScenarioOverrides)

    @model_validator(mode="after")
    def check_grid(self):
        problems = []
        unknown = sorted(set(self.models) - set(FORMULATIONS))
        if unknown:
            problems.append(f"models: unknown formulation ids {unknown}")
        for n_steps in self.steps:
            if n_steps < 1:
                problems.append(f"steps: J must be positive, got {n_steps}")
            elif self.n_clusters % n_steps or self.n_clusters < n_steps:
                problems.append(f"steps: {self.n_clusters} clusters cannot be split evenly into {n_steps} groups")
        if problems:
            raise ValueError("; ".join(problems))
        return self
