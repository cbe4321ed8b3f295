"""Fit reports (JSON and aligned text) and run manifests."""

from dataclasses import asdict
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from src.estimation.estimators import GmmFit
from src.utils.jsonio import config_hash, json_dump

PACKAGE = "starch-gmm"


def package_version() -> str:
    try:
        return version(PACKAGE)
    except PackageNotFoundError:
        return "0.0.0+local"


def json_safe(value: Any) -> Any:
    # JSON has no NaN or infinity
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    return value


def fit_report(fit: GmmFit) -> Dict[str, Any]:
    """Machine-readable report of a fit.

    :param fit: Fitted model
    :type fit: GmmFit
    :return: JSON-compatible dictionary, NaN mapped to null
    :rtype: Dict[str, Any]
    """
    table = fit.summary_frame()
    parameters = [
        {"name": name, **{col: row[col] for col in table.columns}}
        for name, row in table.iterrows()
    ]
    report = {
        "stage": fit.stage,
        "vcov_form": fit.vcov_form,
        "n": fit.n,
        "T": fit.T,
        "objective": fit.objective,
        "sigma2": fit.sigma2,
        "mu4": fit.mu4,
        "parameters": parameters,
        "vcov": fit.vcov,
        "alpha_hat": fit.alpha_hat,
        "mu_hat": fit.mu_hat,
        "moment_report": fit.moment_report,
        "stationarity": asdict(fit.stationarity),
        "identification": asdict(fit.identification) if fit.identification else None,
        "ladder": [asdict(record) for record in fit.ladder],
        "diagnostics": fit.diagnostics.summary() if fit.diagnostics is not None else None,
    }
    return json_safe(report)


def render_text(report: Dict[str, Any]) -> str:
    """Aligned human-readable rendering of :func:`fit_report` output."""
    lines = [
        f"Stage: {report['stage']}  (covariance: {report['vcov_form']})",
        f"n = {report['n']}, T = {report['T']}, objective = {_num(report['objective'], '.6g')}",
        "",
        f"{'parameter':<12}{'estimate':>12}{'se':>12}{'t':>10}{'p-value':>10}",
    ]
    for row in report["parameters"]:
        lines.append(
            f"{row['name']:<12}{_num(row['estimate'], '.4f'):>12}{_num(row['se'], '.4f'):>12}"
            f"{_num(row['t'], '.2f'):>10}{_num(row['p_value'], '.4f'):>10}"
        )
    lines += ["", "Stage ladder:"]
    for rec in report["ladder"]:
        lines.append(
            f"  {rec['stage']:<8} objective={_num(rec['objective'], '.6g')} "
            f"converged={rec['converged']} nfev={rec['nfev']}"
        )
    station = report["stationarity"]
    lines.append("")
    lines.append(
        "Stationarity: ok" if station["ok"] else f"Stationarity: condition ({station['violated']}) violated"
    )
    ident = report.get("identification")
    if ident and ident["flagged"]:
        lines.append("Identification: weak (condition numbers above threshold)")
    diag = report.get("diagnostics")
    if diag:
        lines += [
            "",
            f"Locations with autocorrelated residuals (Ljung-Box, lag {diag['lags']}): "
            f"{_num(diag['pct_locations_autocorrelated'], '.1f')}%",
            f"Periods with positive residual Moran's I: {_num(diag['pct_periods_spatial'], '.1f')}%",
        ]
    return "\n".join(lines) + "\n"


def _num(value: Optional[float], spec: str) -> str:
    return "nan" if value is None else format(value, spec)


def write_manifest(
    out_dir: Path, command: str, seed: Optional[int], config: Dict[str, Any]
) -> Path:
    """Write ``manifest.json``; the only file carrying a timestamp.

    :param out_dir: Output directory
    :type out_dir: Path
    :param command: Subcommand name
    :type command: str
    :param seed: Seed in effect
    :type seed: Optional[int]
    :param config: Configuration hashed into ``config_hash``
    :type config: Dict[str, Any]
    :return: The manifest path
    :rtype: Path
    """
    manifest = {
        "command": command,
        "seed": seed,
        "config_hash": config_hash(config),
        "version": package_version(),
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return json_dump(manifest, Path(out_dir) / "manifest.json")


__all__ = ["fit_report", "json_safe", "package_version", "render_text", "write_manifest"]
