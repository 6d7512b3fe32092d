"""
Model definitions for the stepped-wedge simulator.

Each model file corresponds to a service with the same domain.
"""

# Trial design
from .design import TrialDesign

# Cohort trajectories
from .cohort import CohortMode, CohortPanel, ParticipantTrajectory

# Scenarios and observations
from .outcome import (
    OBSERVATION_COLUMNS,
    SECULAR_TREND,
    AgeResponse,
    NonlinearForm,
    ScenarioConfig,
    ScenarioName,
    ScenarioOverrides,
)

# Analysis model formulations
from .modelspec import (
    FORMULATIONS,
    FixedTerm,
    ModelFormulation,
    ModelMatrices,
    RandomTerm,
    get_formulation,
    get_formulations,
)

# Mixed model fits
from .lmm import LmmFit, SolverOptions, VarianceComponents

# Inference
from .inference import CoefficientTest

# Monte Carlo results
from .harness import ReplicateResult, RunManifest, RunStatus, ScenarioSummary

# Run configuration
from .run_config import RunConfig

__all__ = [
    # Trial design
    "TrialDesign",
    # Cohort trajectories
    "CohortMode",
    "CohortPanel",
    "ParticipantTrajectory",
    # Scenarios and observations
    "OBSERVATION_COLUMNS",
    "SECULAR_TREND",
    "AgeResponse",
    "NonlinearForm",
    "ScenarioConfig",
    "ScenarioName",
    "ScenarioOverrides",
    # Analysis model formulations
    "FORMULATIONS",
    "FixedTerm",
    "ModelFormulation",
    "ModelMatrices",
    "RandomTerm",
    "get_formulation",
    "get_formulations",
    # Mixed model fits
    "LmmFit",
    "SolverOptions",
    "VarianceComponents",
    # Inference
    "CoefficientTest",
    # Monte Carlo results
    "ReplicateResult",
    "RunManifest",
    "RunStatus",
    "ScenarioSummary",
    # Run configuration
    "RunConfig",
]
