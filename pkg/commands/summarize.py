import argparse
import logging

from commands import EXIT_OK
from services.results_recorder import read_replicates_csv, write_summary_csv
from services.simulation_orchestrator import summarize

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("summarize", help="Aggregate an existing replicate CSV into a summary CSV")
    parser.add_argument("replicates", metavar="CSV", help="Replicate CSV written by simulate")
    parser.add_argument("--out", default="summary.csv", metavar="PATH", help="Summary CSV path (default summary.csv)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    results = read_replicates_csv(args.replicates)
    summaries = summarize(results)
    write_summary_csv(summaries, args.out)
    logger.info(f"Summarized {len(results)} records into {len(summaries)} cells")
    print(args.out)
    return EXIT_OK
