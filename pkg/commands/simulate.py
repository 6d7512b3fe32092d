import argparse
import json
import logging

from commands import EXIT_OK, EXIT_RUNTIME_ERROR, add_run_options, run_config_from_args
from models import RunConfig
from services.simulation_orchestrator import SimulationOrchestrator, all_cells_converged

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="Run the Monte Carlo grid and write replicate, summary and manifest files")
    add_run_options(parser)
    parser.add_argument("--print-schema", action="store_true", help="Print the run configuration JSON schema and exit")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.print_schema:
        print(json.dumps(RunConfig.model_json_schema(), indent=2))
        return EXIT_OK

    config = run_config_from_args(args)
    logger.info(f"Simulating {len(config.scenarios)} scenarios x {len(config.thetas)} thetas x "
                f"{len(config.steps)} step counts x {config.n_reps} replicates with models {config.models}")
    orchestrator = SimulationOrchestrator(config)
    summaries = orchestrator.run()
    print(orchestrator.outputs["summary"])
    if not all_cells_converged(summaries):
        empty = [f"{s.scenario}/theta={s.theta}/J={s.n_steps}/model {s.model}" for s in summaries if s.n_converged == 0]
        logger.warning(f"No converged fit in {len(empty)} cells: {', '.join(empty)}")
        return EXIT_RUNTIME_ERROR
    return EXIT_OK
