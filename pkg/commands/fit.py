import argparse
import json
import logging

from commands import EXIT_OK
from config import settings
from models import get_formulation
from services.model_matrix_builder import build_matrices
from services.reml_solver import RemlSolver
from services.results_recorder import read_observations_csv
from services.satterthwaite import satterthwaite_df, wald_t_test
from services.simulation_orchestrator import EFFECT_LABEL

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("fit", help="Fit one analysis model to an observation CSV and print JSON")
    parser.add_argument("dataset", metavar="CSV", help="Observation table")
    parser.add_argument("--model", type=int, default=4, metavar="ID", help="Model formulation id (default 4)")
    parser.add_argument("--alpha", type=float, default=None, metavar="LEVEL", help="Two-sided significance level")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    formulation = get_formulation(args.model)
    alpha = settings.inference.alpha if args.alpha is None else args.alpha
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    table = read_observations_csv(args.dataset)
    matrices = build_matrices(table, formulation)
    solver = RemlSolver(matrices)
    fit = solver.fit()
    df = satterthwaite_df(matrices, fit, EFFECT_LABEL, solver=solver)
    test = wald_t_test(fit, df.df, EFFECT_LABEL, alpha=alpha, df_fallback=df.fallback)

    payload = {
        "model": formulation.id,
        "description": formulation.description,
        "fit": fit.model_dump(mode="json"),
        "standard_errors": dict(zip(fit.labels, fit.standard_errors)),
        "test": test.model_dump(mode="json"),
    }
    # rendered in full before anything reaches standard output
    text = json.dumps(payload, indent=2)
    print(text)
    logger.info(f"Model {formulation.id}: theta={test.estimate:.4f} (SE {test.standard_error:.4f}, "
                f"df {test.df:.1f}, p {test.p_value:.4g})")
    return EXIT_OK
