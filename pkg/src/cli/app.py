"""Command-line dispatcher.

Exit codes: 0 ok, 1 usage or configuration error, 2 data or I/O error,
3 numerical failure.
"""

import argparse
import sys
from typing import Optional, Sequence

from src.cli.commands import COMMANDS
from src.cli.reports import package_version
from src.utils.errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    NumericalError,
    WeightsValidationError,
)
from src.utils.logging import get_logger

logger = get_logger("cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; route them through ConfigError
    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}", field="usage")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="starch",
        description="Simulation and GMM estimation of dynamic spatiotemporal ARCH panels",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {package_version()}")
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and run the selected subcommand.

    :param argv: Arguments without the program name; ``sys.argv[1:]`` if None
    :type argv: Optional[Sequence[str]]
    :return: Process exit code
    :rtype: int
    """
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "handler", None) is None:
            raise ConfigError("a command is required: simulate, estimate, montecarlo or diagnose", field="command")
        return args.handler(args)
    except ConfigError as exc:
        _report("configuration error", exc)
        return EXIT_USAGE
    except (DataError, WeightsValidationError) as exc:
        _report("data error", exc)
        return EXIT_DATA
    except OSError as exc:
        _report("I/O error", exc)
        return EXIT_DATA
    except ConvergenceError as exc:
        _report("numerical failure", exc, gradient_norm=exc.gradient_norm)
        return EXIT_NUMERICAL
    except NumericalError as exc:
        _report("numerical failure", exc)
        return EXIT_NUMERICAL


def _report(kind: str, exc: Exception, **extra) -> None:
    field = getattr(exc, "field", None)
    logger.error(f"{kind}: {exc}", extra={"field": field, "error_type": type(exc).__name__, **extra})
    print(f"starch: {kind}: {exc}", file=sys.stderr)


__all__ = ["EXIT_DATA", "EXIT_NUMERICAL", "EXIT_OK", "EXIT_USAGE", "build_parser", "run"]
