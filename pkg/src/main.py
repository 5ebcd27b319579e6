"""Main entry point for markov-copula."""

import sys
from typing import List, Optional

import structlog

from cli import run
from config import __version__, settings
from utils import setup_logging

logger = structlog.get_logger()


def main(argv: Optional[List[str]] = None) -> None:
    """Main application entry point."""
    setup_logging(log_level=settings.log_level, log_format=settings.log_format)
    logger.info("starting_markov_copula", version=__version__, threads=settings.threads)
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
