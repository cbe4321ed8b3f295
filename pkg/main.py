"""Entry point for the starch command-line tool."""

import sys

from dotenv import load_dotenv

# Settings are read at import time, so .env must be loaded first
load_dotenv(".env")

from src.cli.app import run  # noqa: E402
from src.config.settings import settings  # noqa: E402
from src.utils.logging import get_logger, setup_logging  # noqa: E402

logger = get_logger("main")


def main() -> None:
    """Main entry point."""
    setup_logging(settings.log_level, settings.log_file, settings.log_format)
    try:
        code = run(sys.argv[1:])
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        code = 130
    sys.exit(code)


if __name__ == "__main__":
    main()
