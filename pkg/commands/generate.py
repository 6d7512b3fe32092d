import argparse
import logging

from commands import EXIT_OK, add_run_options, run_config_from_args
from services.outcome_generator import scenario_preset
from services.results_recorder import write_design_csv, write_observations_csv, write_panel_csv
from services.simulation_orchestrator import replicate_seed, simulate_dataset
from services.trial_design import standard_swd

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="Simulate one dataset and write its observation table")
    add_run_options(parser, out_help="Observation CSV path (default observations.csv)")
    parser.add_argument("--replicate", type=int, default=0, metavar="R", help="Replicate index keyed into the seed")
    parser.add_argument("--design-out", metavar="PATH", help="Also write the cluster allocation CSV")
    parser.add_argument("--panel-out", metavar="PATH", help="Also write the cohort panel CSV")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """Uses the first scenario, theta and J of the resolved configuration."""
    config = run_config_from_args(args, include_out=False)
    scenario_name, theta, n_steps = config.scenarios[0].value, config.thetas[0], config.steps[0]
    scenario = scenario_preset(scenario_name, theta, n_steps, config.overrides)
    seed = replicate_seed(config.master_seed, scenario_name, theta, n_steps, args.replicate)
    design, panel, table = simulate_dataset(
        scenario, standard_swd(config.n_clusters, n_steps, config.period_length), seed,
        cluster_size=config.cluster_size, rerandomize=config.rerandomize,
    )

    out_path = args.out or "observations.csv"
    write_observations_csv(table, out_path)
    if args.design_out:
        write_design_csv(design, args.design_out)
    if args.panel_out:
        write_panel_csv(panel, args.panel_out)
    logger.info(f"Scenario {scenario_name}, theta={theta}, J={n_steps}: wrote {len(table)} rows to {out_path}")
    print(len(table))
    return EXIT_OK
