"""GMM estimation of dynamic spatiotemporal ARCH panels."""

from .diagnostics import (
    ResidualDiagnostics,
    attach_diagnostics,
    estimate_volatility,
    panel_descriptives,
    residual_diagnostics,
)
from .estimators import (
    GmmFit,
    fit_2sls,
    fit_best_gmm,
    fit_initial_gmm,
    fit_optimal_gmm,
    fit_stage,
    recover_effects,
)
from .instruments import best_instruments
from .moments import EstimationData, MomentSet, default_iv, omega_hat, prepare_data

__all__ = [
    "EstimationData",
    "GmmFit",
    "MomentSet",
    "ResidualDiagnostics",
    "attach_diagnostics",
    "best_instruments",
    "default_iv",
    "estimate_volatility",
    "fit_2sls",
    "fit_best_gmm",
    "fit_initial_gmm",
    "fit_optimal_gmm",
    "fit_stage",
    "omega_hat",
    "panel_descriptives",
    "prepare_data",
    "recover_effects",
    "residual_diagnostics",
]
