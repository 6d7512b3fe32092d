import argparse
import logging
import sys
from typing import List, Optional

import logfire
from dotenv import load_dotenv
from pydantic import ValidationError

# Load environment variables early
load_dotenv()

from commands import EXIT_CONFIG_ERROR, EXIT_RUNTIME_ERROR, fit, generate, simulate, summarize  # noqa: E402
from config import settings  # noqa: E402
from utils.errors import ConfigError  # noqa: E402

VERSION = "1.0.0"

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swcrt-sim",
        description="Simulate and analyse stepped-wedge cluster randomized trials in cohorts",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--log-level", default=None, help="Logging level (default from LOG_LEVEL, INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (generate, fit, simulate, summarize):
        command.register(subparsers)
    return parser


def setup_logging(level: Optional[str] = None) -> None:
    # logs go to standard error; standard output carries command results only
    logging.basicConfig(
        level=(level or settings.app.log_level).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    logfire.configure(
        send_to_logfire="if-token-present",
        environment=settings.app.logfire_environment,
        service_name=settings.app.service_name,
        console=False,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except (ConfigError, ValidationError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except Exception as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
