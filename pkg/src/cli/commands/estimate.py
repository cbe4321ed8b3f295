"""``starch estimate``: fit a panel CSV against a weights file."""

import argparse
from pathlib import Path

from src.cli.commands.base import build_data, output_dir, read_weights
from src.cli.panel_io import read_panel_csv
from src.cli.reports import fit_report, render_text, write_manifest
from src.config.settings import settings
from src.estimation.diagnostics import attach_diagnostics
from src.estimation.estimators import fit_stage
from src.utils.jsonio import json_dump
from src.utils.logging import get_logger

logger = get_logger("cmd_estimate")

STAGES = ("2sls", "initial", "optimal", "best")


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("estimate", help="estimate a panel by 2SLS or GMM")
    parser.add_argument("panel", type=Path, help="long-format panel CSV")
    parser.add_argument("weights", type=Path, nargs="+", help="triplet weight file(s)")
    parser.add_argument("--stage", choices=STAGES, default="best")
    parser.add_argument(
        "--no-time-effects", action="store_true", help="model without alpha_t (skip J_n)"
    )
    vcov = parser.add_mutually_exclusive_group()
    vcov.add_argument("--finite-t-vcov", action="store_true", help="force the finite-T covariance")
    vcov.add_argument("--large-t-vcov", action="store_true", help="force the large-T covariance")
    parser.add_argument("--dummies", default=None, help="comma list of month,year dummies")
    parser.add_argument("--date-column", default=None, help="date column for --dummies")
    parser.add_argument("--no-diagnostics", action="store_true")
    parser.add_argument("--seed", type=int, default=None, help="seed of the Moran permutations")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.set_defaults(handler=run)


def vcov_form(args: argparse.Namespace) -> str:
    if getattr(args, "finite_t_vcov", False):
        return "finite_t"
    if getattr(args, "large_t_vcov", False):
        return "large_t"
    return "auto"


def run(args: argparse.Namespace) -> int:
    """Fit the requested stage and write fit.json, fit.txt, estimates.csv.

    :param args: Parsed arguments
    :type args: argparse.Namespace
    :return: Exit code 0 once the stage converged
    :rtype: int
    """
    dummies = [d.strip() for d in args.dummies.split(",")] if args.dummies else None
    panel = read_panel_csv(args.panel, dummies, args.date_column)
    weights = read_weights(args.weights)
    data = build_data(panel, weights, has_time_effects=not args.no_time_effects)

    fit = fit_stage(data, args.stage, vcov_form(args))
    seed = settings.seed if args.seed is None else args.seed
    if not args.no_diagnostics:
        fit = attach_diagnostics(fit, data, seed=seed)

    report = fit_report(fit)
    report["spec"] = data.spec.model_dump()
    report["regressors"] = panel.names

    out = output_dir(args.out)
    json_dump(report, out / "fit.json")
    text = render_text(report)
    (out / "fit.txt").write_text(text, encoding="utf-8")
    fit.summary_frame().to_csv(out / "estimates.csv")
    if fit.diagnostics is not None:
        fit.diagnostics.acf_frame().to_csv(out / "residual_acf.csv", index=False)
        fit.diagnostics.moran_frame().to_csv(out / "residual_moran.csv", index=False)

    write_manifest(
        out,
        "estimate",
        seed,
        {
            "panel": str(args.panel),
            "weights": [str(w) for w in args.weights],
            "stage": args.stage,
            "vcov_form": vcov_form(args),
            "spec": report["spec"],
        },
    )
    print(text, end="")
    return 0
