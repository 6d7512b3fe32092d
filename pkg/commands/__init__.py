"""
Command-line subcommands. Each module exposes register(subparsers), which adds
its parser and sets the handler returning the process exit status.
"""
import argparse
from typing import Any, Dict

from models import RunConfig
from utils.run_config_loader import load_run_config

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def _id_list(value: str):
    return [int(part) for part in value.split(",") if part.strip()]


def _name_list(value: str):
    return [part.strip() for part in value.split(",") if part.strip()]


def _float_list(value: str):
    return [float(part) for part in value.split(",") if part.strip()]


def add_run_options(parser: argparse.ArgumentParser, out_help: str = "Output directory") -> None:
    parser.add_argument("--config", metavar="PATH", help="YAML run configuration")
    parser.add_argument("--seed", type=int, metavar="U64", help="Master seed")
    parser.add_argument("--reps", type=int, metavar="N", help="Replicates per cell")
    parser.add_argument("--workers", type=int, metavar="N", help="Worker processes")
    parser.add_argument("--out", metavar="DIR", help=out_help)
    parser.add_argument("--alpha", type=float, metavar="LEVEL", help="Two-sided significance level")
    parser.add_argument("--model", type=_id_list, metavar="IDS", help="Comma-separated model ids, e.g. 1,4")
    parser.add_argument("--scenario", type=_name_list, metavar="NAMES", help="Comma-separated scenarios, e.g. a,d")
    parser.add_argument("--theta", type=_float_list, metavar="VALUES", help="Comma-separated intervention effects")
    parser.add_argument("--steps", type=_id_list, metavar="J", help="Comma-separated numbers of steps")


def cli_values(args: argparse.Namespace, include_out: bool = True) -> Dict[str, Any]:
    values = {
        "master_seed": args.seed,
        "n_reps": args.reps,
        "workers": args.workers,
        "alpha": args.alpha,
        "models": args.model,
        "scenarios": args.scenario,
        "thetas": args.theta,
        "steps": args.steps,
    }
    if include_out:
        values["output_dir"] = args.out
    return values


def run_config_from_args(args: argparse.Namespace, include_out: bool = True) -> RunConfig:
    return load_run_config(args.config, cli_values(args, include_out=include_out))
