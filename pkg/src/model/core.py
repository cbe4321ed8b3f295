"""Reduced-form operators and stationarity checks.

With S(rho) = I - sum_l rho_l M_l the log-squared panel has the reduced form

    Y*_t = A Y*_{t-1} + S^{-1}(X_t beta + mu + alpha_t 1 + eps*_t),
    A = S^{-1}(gamma I + sum_l delta_l M_l),

and G_r = M_r S^{-1} maps the reduced form back to the spatial lags.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la

from src.config.settings import settings
from src.models.base_models import ModelSpec, Theta
from src.spatial.weights import SpatialWeightSet
from src.utils.errors import StationarityError, WeightsValidationError
from src.utils.logging import get_logger

logger = get_logger("model")


@dataclass(frozen=True, eq=False)
class Operators:
    """Materialized reduced-form operators for one theta.

    :param S: I - sum rho_l M_l
    :param S_inv: Inverse of S
    :param A: S^{-1}(gamma I + sum delta_l M_l)
    :param G: M_r S^{-1} for r = 1..p
    :param rcond: Reciprocal 1-norm condition number of S
    """

    S: np.ndarray
    S_inv: np.ndarray
    A: np.ndarray
    G: Tuple[np.ndarray, ...]
    rcond: float

    @property
    def n(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True)
class StationarityReport:
    """Outcome of the sufficient stationarity conditions.

    ``condition_i`` and ``condition_ii`` hold the left-hand sides that must
    stay below one; ``violated`` names the first failing condition.
    """

    ok: bool
    violated: Optional[str]
    condition_i: float
    condition_ii: float
    norm_based: bool


def _check_dimensions(spec: ModelSpec, theta: Theta, weights: SpatialWeightSet) -> None:
    if weights.p != spec.p:
        raise WeightsValidationError(
            f"spec expects p={spec.p} weight matrices, got {weights.p}", field="p"
        )
    if not theta.matches(spec):
        raise ValueError(
            f"theta has p={theta.p}, k={theta.k}; spec expects p={spec.p}, k={spec.k}"
        )


def spatial_filter(rho, weights: SpatialWeightSet) -> np.ndarray:
    """S(rho) = I_n - sum_l rho_l M_l."""
    return np.eye(weights.n) - weights.combine(rho)


def build_operators(
    spec: ModelSpec,
    theta: Theta,
    weights: SpatialWeightSet,
    rcond_threshold: Optional[float] = None,
) -> Operators:
    """Materialize S, S^{-1}, A and G_1..G_p.

    :param spec: Model structure
    :type spec: ModelSpec
    :param theta: Parameters
    :type theta: Theta
    :param weights: Spatial weights
    :type weights: SpatialWeightSet
    :param rcond_threshold: Reciprocal condition below which S is rejected
    :type rcond_threshold: Optional[float]
    :return: The operators
    :rtype: Operators
    :raises StationarityError: If S(rho) is singular or ill-conditioned
    """
    _check_dimensions(spec, theta, weights)
    threshold = settings.s_rcond if rcond_threshold is None else rcond_threshold

    S = spatial_filter(theta.rho, weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.linalg.cond(S, 1)
    rcond = 0.0 if not np.isfinite(cond) or cond == 0 else 1.0 / cond
    if rcond < threshold:
        raise StationarityError(
            f"S(rho) is singular for rho={list(theta.rho)} (reciprocal condition {rcond:.3e})",
            field="rho",
        )

    S_inv = la.inv(S)
    A = S_inv @ (theta.gamma * np.eye(weights.n) + weights.combine(theta.delta))
    G = tuple(m @ S_inv for m in weights.mats)
    return Operators(S=S, S_inv=S_inv, A=A, G=G, rcond=rcond)


def check_stationarity(
    spec: ModelSpec,
    theta: Theta,
    weights: SpatialWeightSet,
) -> StationarityReport:
    """Evaluate the sufficient stationarity conditions.

    For row-normalized weights: (i) sum|rho| < 1 and
    (ii) sum|rho| + |gamma| + sum|delta| < 1. Otherwise the norm-based forms
    with tau = max_l ||M_l||_inf are used: (i) tau * sum|rho| < 1 and
    (ii) (|gamma| + tau * sum|delta|) / (1 - tau * sum|rho|) < 1.

    :param spec: Model structure
    :type spec: ModelSpec
    :param theta: Parameters
    :type theta: Theta
    :param weights: Spatial weights
    :type weights: SpatialWeightSet
    :return: Pass/fail with the failing condition
    :rtype: StationarityReport
    """
    _check_dimensions(spec, theta, weights)
    sum_rho = float(np.abs(theta.rho).sum())
    sum_delta = float(np.abs(theta.delta).sum())
    gamma = abs(theta.gamma)

    if weights.all_row_normalized:
        cond_i = sum_rho
        cond_ii = sum_rho + gamma + sum_delta
        norm_based = False
    else:
        tau = weights.max_inf_norm
        cond_i = tau * sum_rho
        cond_ii = np.inf if cond_i >= 1 else (gamma + tau * sum_delta) / (1.0 - cond_i)
        norm_based = True

    violated = None
    if not cond_i < 1:
        violated = "i"
    elif not cond_ii < 1:
        violated = "ii"
    return StationarityReport(
        ok=violated is None,
        violated=violated,
        condition_i=float(cond_i),
        condition_ii=float(cond_ii),
        norm_based=norm_based,
    )


def warn_if_nonstationary(spec: ModelSpec, theta: Theta, weights: SpatialWeightSet) -> StationarityReport:
    """Run ``check_stationarity`` and log a warning when it fails."""
    report = check_stationarity(spec, theta, weights)
    if not report.ok:
        logger.warning(
            "Sufficient stationarity condition violated",
            extra={
                "condition": report.violated,
                "condition_i": report.condition_i,
                "condition_ii": report.condition_ii,
            },
        )
    return report


__all__ = [
    "Operators",
    "StationarityReport",
    "build_operators",
    "check_stationarity",
    "spatial_filter",
    "warn_if_nonstationary",
]
