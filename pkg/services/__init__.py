from .model_matrix_builder import build_matrices
from .reml_solver import RemlSolver
from .results_recorder import ReplicateRecorder
from .simulation_orchestrator import SimulationOrchestrator

__all__ = [
    "RemlSolver",
    "ReplicateRecorder",
    "SimulationOrchestrator",
    "build_matrices",
]
