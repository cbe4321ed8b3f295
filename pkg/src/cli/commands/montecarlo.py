"""``starch montecarlo``: run a preset or a JSON ExperimentConfig."""

import argparse
from pathlib import Path

from src.cli.commands.base import load_config, output_dir
from src.cli.reports import json_safe, write_manifest
from src.config.settings import settings
from src.models.base_models import ExperimentConfig
from src.montecarlo.experiment import run_experiment
from src.montecarlo.presets import preset_config
from src.montecarlo.tables import emit_table
from src.utils.errors import ConfigError
from src.utils.jsonio import json_dump
from src.utils.logging import get_logger

logger = get_logger("cmd_montecarlo")


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("montecarlo", help="run a Monte Carlo experiment")
    parser.add_argument("config", type=Path, nargs="?", help="ExperimentConfig JSON file")
    parser.add_argument("--preset", default=None, help="named design, e.g. table-a1-gaussian-small")
    parser.add_argument("--full", action="store_true", help="use the full replication count")
    parser.add_argument("--replications", type=int, default=None)
    parser.add_argument("--stage", choices=("2sls", "initial", "optimal", "best"), default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.set_defaults(handler=run)


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """ExperimentConfig from ``--preset`` or a config file plus CLI overrides.

    :param args: Parsed arguments
    :type args: argparse.Namespace
    :return: The validated configuration
    :rtype: ExperimentConfig
    :raises ConfigError: If neither or both sources are given, or on invalid values
    """
    if (args.config is None) == (args.preset is None):
        raise ConfigError("give exactly one of a config file or --preset", field="config")
    replications = settings.full_replications if args.full else args.replications
    overrides = {
        "replications": replications,
        "stage": args.stage,
        "workers": args.workers,
        "seed": args.seed,
    }
    if args.preset is not None:
        return preset_config(
            args.preset,
            settings.seed if args.seed is None else args.seed,
            replications=replications or settings.replications,
            stage=args.stage,
            workers=args.workers or settings.workers,
        )
    return load_config(args.config, ExperimentConfig, overrides)


def run(args: argparse.Namespace) -> int:
    """Run the experiment and write table.txt, table.csv, estimates.csv, result.json.

    :param args: Parsed arguments
    :type args: argparse.Namespace
    :return: Exit code 0; an unreliable experiment is flagged in result.json
    :rtype: int
    """
    config = resolve_config(args)
    result = run_experiment(config)

    out = output_dir(args.out)
    text = emit_table(result, "text", coverage=True)
    (out / "table.txt").write_text(text, encoding="utf-8")
    (out / "table.csv").write_text(emit_table(result, "csv", coverage=True), encoding="utf-8")
    result.estimates_frame().to_csv(out / "estimates.csv", index=False)
    summary = result.summary_frame()
    json_dump(
        json_safe({
            "config": config.model_dump(mode="json"),
            "labels": list(result.labels),
            "bias": summary["bias"].tolist(),
            "mae": summary["mae"].tolist(),
            "mae_se": summary["mae_se"].tolist(),
            "coverage": summary["coverage"].tolist(),
            "successes": result.successes,
            "failures": result.failures,
            "unreliable": result.unreliable,
        }),
        out / "result.json",
    )
    write_manifest(out, "montecarlo", config.seed, config.model_dump(mode="json"))
    print(text, end="")
    if result.unreliable:
        print(f"warning: {result.failure_count} of {result.replications} replications failed")
    return 0
