"""``starch simulate``: draw one panel from a DgpConfig."""

import argparse
from pathlib import Path

from src.cli.commands.base import load_config, output_dir
from src.cli.panel_io import write_panel_csv
from src.cli.reports import write_manifest
from src.models.base_models import DgpConfig
from src.simulation.dgp import simulate
from src.spatial.weights import save_weights, weights_from_recipe
from src.utils.jsonio import json_dump
from src.utils.logging import get_logger

logger = get_logger("cmd_simulate")


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="simulate a panel from a JSON DgpConfig")
    parser.add_argument("config", type=Path, help="DgpConfig JSON file")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """Simulate and write panel.csv, weights.txt, truth.json and the manifest.

    :param args: Parsed arguments with ``config``, ``out`` and ``seed``
    :type args: argparse.Namespace
    :return: Exit code 0
    :rtype: int
    """
    config = load_config(args.config, DgpConfig, {"seed": args.seed})
    weights = weights_from_recipe(config.weights)
    sim = simulate(config, weights)

    out = output_dir(args.out)
    write_panel_csv(sim.panel, out / "panel.csv")
    save_weights(weights, out / "weights.txt")
    json_dump(
        {
            "spec": config.spec.model_dump(),
            "theta": config.theta.model_dump(),
            "mu": sim.mu,
            "alpha": sim.alpha,
        },
        out / "truth.json",
    )
    payload = config.model_dump(mode="json")
    write_manifest(out, "simulate", config.seed, payload)
    logger.info("Simulated panel written", extra={"out": str(out), "n": weights.n, "T": config.T})
    print(f"wrote {out / 'panel.csv'} (n={weights.n}, T={config.T}, k={config.spec.k})")
    return 0
