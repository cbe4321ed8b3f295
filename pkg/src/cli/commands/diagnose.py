"""``starch diagnose``: residual, descriptive and volatility tables."""

import argparse
from pathlib import Path
from typing import Optional

import numpy as np

from src.cli.commands.base import build_data, output_dir, read_weights
from src.cli.panel_io import read_panel_csv
from src.cli.reports import json_safe, write_manifest
from src.config.settings import settings
from src.estimation.diagnostics import (
    diagnose_residuals,
    estimate_volatility,
    panel_descriptives,
)
from src.estimation.estimators import fit_stage
from src.estimation.moments import EstimationData, residuals
from src.utils.errors import ConfigError
from src.utils.jsonio import json_dump, json_load
from src.utils.logging import get_logger

logger = get_logger("cmd_diagnose")


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("diagnose", help="residual and descriptive diagnostics")
    parser.add_argument("panel", type=Path, help="long-format panel CSV")
    parser.add_argument("weights", type=Path, nargs="+", help="triplet weight file(s)")
    parser.add_argument("--fit", type=Path, default=None, help="fit.json from estimate")
    parser.add_argument("--stage", choices=("2sls", "initial", "optimal", "best"), default="best")
    parser.add_argument("--no-time-effects", action="store_true")
    parser.add_argument("--lags", type=int, default=None, help="Ljung-Box lag")
    parser.add_argument("--permutations", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.set_defaults(handler=run)


def _theta_from_fit(path: Optional[Path], data: EstimationData) -> Optional[np.ndarray]:
    if path is None or not Path(path).exists():
        return None
    report = json_load(path)
    theta = np.array([row["estimate"] for row in report.get("parameters", [])], dtype=float)
    if theta.size != data.K:
        raise ConfigError(
            f"{Path(path).name} holds {theta.size} estimates, the data need {data.K}",
            field="parameters",
        )
    return theta


def run(args: argparse.Namespace) -> int:
    """Compute diagnostics from a saved fit, refitting when none is available.

    :param args: Parsed arguments
    :type args: argparse.Namespace
    :return: Exit code 0
    :rtype: int
    """
    panel = read_panel_csv(args.panel)
    weights = read_weights(args.weights)
    data = build_data(panel, weights, has_time_effects=not args.no_time_effects)

    theta = _theta_from_fit(args.fit, data)
    if theta is None:
        logger.warning(
            "No fit file available; refitting", extra={"fit": str(args.fit), "stage": args.stage}
        )
        theta = fit_stage(data, args.stage).vector

    seed = settings.seed if args.seed is None else args.seed
    U = data.project(residuals(theta, data))
    diag = diagnose_residuals(U, weights, args.lags, args.permutations, seed)
    desc = panel_descriptives(panel, weights, args.lags)
    vol = estimate_volatility(theta, data)

    out = output_dir(args.out)
    diag.acf_frame().to_csv(out / "residual_acf.csv", index=False)
    diag.moran_frame().to_csv(out / "residual_moran.csv", index=False)
    desc.acf_frame().to_csv(out / "outcome_acf.csv", index=False)
    desc.moran_frame().to_csv(out / "outcome_st_moran.csv", index=False)
    vol.by_location.to_csv(out / "volatility_by_location.csv")
    vol.by_period.to_csv(out / "volatility_by_period.csv")
    summary = {**diag.summary(), "theta": theta, "mu_eps": vol.mu_eps}
    json_dump(json_safe(summary), out / "diagnostics.json")
    write_manifest(
        out,
        "diagnose",
        seed,
        {"panel": str(args.panel), "weights": [str(w) for w in args.weights], "theta": theta.tolist()},
    )
    print(
        f"locations with autocorrelated residuals: {diag.share_autocorrelated:.1f}%\n"
        f"periods with positive residual Moran's I: {diag.share_spatial:.1f}%"
    )
    return 0
