from typing import List, Tuple

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class SolverSettings(BaseSettings):
    """REML optimizer configuration."""

    start_points: List[float] = Field(
        default=[-2.0, 0.0],
        description="Starting values for each log variance ratio; starts are crossed over both ratios"
    )
    fatol: float = Field(default=1e-8, description="Nelder-Mead tolerance on the criterion")
    xatol: float = Field(default=1e-6, description="Nelder-Mead tolerance on the log ratios")
    max_evaluations: int = Field(default=500, description="Maximum criterion evaluations per start")
    log_ratio_bounds: Tuple[float, float] = Field(
        default=(-25.0, 12.0),
        description="Box constraint for log variance ratios during the search"
    )
    probe_box: Tuple[float, float] = Field(
        default=(-6.0, 3.0),
        description="Box used for post-hoc probing of the criterion"
    )
    boundary_tolerance: float = Field(
        default=1e-8,
        description="A boundary solution is preferred when its criterion is within this of the interior optimum"
    )

    model_config = SettingsConfigDict(env_prefix="SOLVER_", extra="ignore")


class InferenceSettings(BaseSettings):
    """Satterthwaite and significance-test configuration."""

    alpha: float = Field(default=0.05, gt=0, lt=1, description="Two-sided significance level")
    gradient_step: float = Field(default=1e-4, description="Relative finite-difference step for the variance gradient")
    hessian_step: float = Field(default=1e-3, description="Relative finite-difference step for the REML Hessian")
    step_floor: float = Field(default=1e-6, description="Absolute step floor as a fraction of the residual variance")

    model_config = SettingsConfigDict(env_prefix="INFERENCE_", extra="ignore")


class SimulationSettings(BaseSettings):
    """Monte Carlo run defaults."""

    workers: int = Field(default=1, ge=1, description="Worker processes for the replicate pool")
    output_dir: str = Field(default="results", description="Directory for replicate, summary and manifest files")
    master_seed: int = Field(default=20240101, ge=0, description="Master seed when none is configured")
    rerandomize: bool = Field(default=True, description="Draw a fresh cluster allocation for every replicate")

    model_config = SettingsConfigDict(env_prefix="SIMULATION_", extra="ignore")


class AppSettings(BaseSettings):
    """Main application settings."""

    log_level: str = Field(default="INFO", description="Root logging level")
    logfire_environment: str = Field(
        default="dev",
        description="Logfire environment name"
    )
    service_name: str = Field(default="swcrt-sim", description="Service name reported to logfire")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )


class Settings(BaseSettings):
    """Combined application settings."""

    solver: SolverSettings = Field(default_factory=SolverSettings)
    inference: InferenceSettings = Field(default_factory=InferenceSettings)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    app: AppSettings = Field(default_factory=AppSettings)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="",
        extra="ignore"
    )


# Create global settings instance
settings = Settings()
