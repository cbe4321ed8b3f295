"""Residual and descriptive diagnostics.

Temporal dependence is checked per location with Ljung-Box tests, spatial
dependence per period with Moran's I and a permutation p-value.
"""

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np
import pandas as pd
from statsmodels.stats.diagnostic import acorr_ljungbox
from statsmodels.tsa.stattools import acf

from src.config.settings import settings
from src.estimation.estimators import GmmFit, recover_effects
from src.estimation.moments import EstimationData, raw_residuals, residuals
from src.estimation.transforms import log_square
from src.models.panel import Panel
from src.spatial.weights import SpatialWeightSet, row_normalize
from src.utils.logging import get_logger

logger = get_logger("diagnostics")


def moran_matrix(weights: SpatialWeightSet) -> np.ndarray:
    """Row-normalized first weight matrix used by every Moran statistic."""
    if weights.row_normalized[0]:
        return weights.mats[0]
    return row_normalize(weights).mats[0]


def _moran_vector(u: np.ndarray, demean: bool) -> np.ndarray:
    z = np.asarray(u, dtype=float)
    return z - z.mean() if demean else z


def morans_i(u: np.ndarray, W: np.ndarray, demean: bool = False) -> float:
    """Moran's I = u'Wu / u'u.

    :param u: Cross-section of length n
    :type u: np.ndarray
    :param W: Row-normalized weights
    :type W: np.ndarray
    :param demean: Subtract the cross-sectional mean from ``u`` first
    :type demean: bool
    :return: The statistic, NaN when u'u is zero
    :rtype: float
    """
    z = _moran_vector(u, demean)
    denom = float(z @ z)
    if denom == 0.0:
        return float("nan")
    return float(z @ (W @ z)) / denom


def moran_permutation_test(
    u: np.ndarray,
    W: np.ndarray,
    permutations: int,
    rng: np.random.Generator,
    demean: bool = False,
) -> tuple:
    """Moran's I with a one-sided permutation p-value for positive dependence.

    p = (#{I_perm >= I_obs} + 1) / (R + 1).

    :return: (statistic, p-value); both NaN when u'u is zero
    :rtype: tuple
    """
    z = _moran_vector(u, demean)
    denom = float(z @ z)
    if denom == 0.0:
        return float("nan"), float("nan")
    observed = float(z @ (W @ z)) / denom
    index = rng.permuted(np.tile(np.arange(z.size), (permutations, 1)), axis=1)
    shuffled = z[index]
    replicates = np.einsum("rn,rn->r", shuffled, shuffled @ W.T) / denom
    pvalue = (np.count_nonzero(replicates >= observed - 1e-12) + 1) / (permutations + 1)
    return observed, float(pvalue)


def _ljung_box(series: np.ndarray, lags: int) -> tuple:
    if np.ptp(series) == 0.0:
        return np.full(lags, np.nan), float("nan")
    coeffs = acf(series, nlags=lags, fft=False)[1:]
    table = acorr_ljungbox(series, lags=[lags], return_df=True)
    return coeffs, float(table["lb_pvalue"].iloc[-1])


@dataclass(frozen=True, eq=False)
class ResidualDiagnostics:
    """Per-location temporal and per-period spatial residual checks.

    :param acf: n x L residual autocorrelations
    :param ljung_box_pvalues: Length-n Ljung-Box p-values at lag L
    :param moran_i: Per-period Moran's I of the residuals
    :param moran_pvalues: Per-period permutation p-values
    :param lags: L
    :param permutations: Permutations per period
    :param significance: Test level for the summary shares
    """

    acf: np.ndarray
    ljung_box_pvalues: np.ndarray
    moran_i: np.ndarray
    moran_pvalues: np.ndarray
    lags: int
    permutations: int
    significance: float

    @property
    def share_autocorrelated(self) -> float:
        """Percentage of locations with significantly autocorrelated residuals."""
        p = self.ljung_box_pvalues[np.isfinite(self.ljung_box_pvalues)]
        return float(100.0 * np.mean(p < self.significance)) if p.size else 0.0

    @property
    def share_spatial(self) -> float:
        """Percentage of periods with significantly positive Moran's I."""
        p = self.moran_pvalues[np.isfinite(self.moran_pvalues)]
        return float(100.0 * np.mean(p < self.significance)) if p.size else 0.0

    def acf_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.acf, columns=[f"lag{h}" for h in range(1, self.lags + 1)])
        frame.insert(0, "location", np.arange(self.acf.shape[0]))
        frame["ljung_box_pvalue"] = self.ljung_box_pvalues
        return frame

    def moran_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "period": np.arange(1, self.moran_i.size + 1),
                "moran_i": self.moran_i,
                "pvalue": self.moran_pvalues,
            }
        )

    def summary(self) -> dict:
        return {
            "lags": self.lags,
            "permutations": self.permutations,
            "significance": self.significance,
            "pct_locations_autocorrelated": self.share_autocorrelated,
            "pct_periods_spatial": self.share_spatial,
        }


def diagnose_residuals(
    U: np.ndarray,
    weights: SpatialWeightSet,
    lags: Optional[int] = None,
    permutations: Optional[int] = None,
    seed: Optional[int] = None,
    significance: Optional[float] = None,
) -> ResidualDiagnostics:
    """Diagnostics of a (periods, n) residual array.

    The Ljung-Box lag is capped at periods - 1.
    """
    U = np.asarray(U, dtype=float)
    periods, n = U.shape
    lags = min(lags or settings.acf_lags, max(periods - 1, 1))
    permutations = permutations or settings.moran_permutations
    seed = settings.seed if seed is None else seed
    significance = significance or settings.significance

    acfs = np.empty((n, lags))
    lb = np.empty(n)
    for i in range(n):
        acfs[i], lb[i] = _ljung_box(U[:, i], lags)

    W = moran_matrix(weights)
    rng = np.random.default_rng(seed)
    stats_, pvals = np.empty(periods), np.empty(periods)
    for t in range(periods):
        stats_[t], pvals[t] = moran_permutation_test(U[t], W, permutations, rng)

    logger.debug(
        "Residual diagnostics computed",
        extra={"locations": n, "periods": periods, "lags": lags},
    )
    return ResidualDiagnostics(
        acf=acfs,
        ljung_box_pvalues=lb,
        moran_i=stats_,
        moran_pvalues=pvals,
        lags=lags,
        permutations=permutations,
        significance=significance,
    )


def residual_diagnostics(
    fit: GmmFit,
    data: EstimationData,
    lags: Optional[int] = None,
    permutations: Optional[int] = None,
    seed: Optional[int] = None,
) -> ResidualDiagnostics:
    """Diagnostics of the J-projected transformed residuals J U*_t(theta_hat).

    :param fit: Fitted model
    :type fit: GmmFit
    :param data: The data it was fitted on
    :type data: EstimationData
    :param lags: Ljung-Box lag L
    :type lags: Optional[int]
    :param permutations: Moran permutations per period
    :type permutations: Optional[int]
    :param seed: Permutation seed
    :type seed: Optional[int]
    :return: Diagnostics with T-1 Moran rows
    :rtype: ResidualDiagnostics
    """
    U = data.project(residuals(fit.vector, data))
    return diagnose_residuals(U, data.weights, lags, permutations, seed)


def attach_diagnostics(fit: GmmFit, data: EstimationData, **kwargs) -> GmmFit:
    """Copy of ``fit`` carrying its residual diagnostics."""
    return replace(fit, diagnostics=residual_diagnostics(fit, data, **kwargs))


@dataclass(frozen=True, eq=False)
class PanelDescriptives:
    """Descriptive statistics of the log-squared outcomes.

    :param mean_log_square: Time average of y*_it per location
    :param acf: n x L autocorrelations of y*_i
    :param st_moran: Spatiotemporal Moran's I per period t = 1..T
    """

    mean_log_square: np.ndarray
    acf: np.ndarray
    st_moran: np.ndarray

    def acf_frame(self) -> pd.DataFrame:
        lags = self.acf.shape[1]
        frame = pd.DataFrame(self.acf, columns=[f"lag{h}" for h in range(1, lags + 1)])
        frame.insert(0, "location", np.arange(self.acf.shape[0]))
        frame["mean_log_square"] = self.mean_log_square
        return frame

    def moran_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"period": np.arange(1, self.st_moran.size + 1), "st_moran_i": self.st_moran}
        )


def panel_descriptives(
    panel: Panel, weights: SpatialWeightSet, lags: Optional[int] = None
) -> PanelDescriptives:
    """Location means, temporal ACFs and spatiotemporal Moran's I of log(y^2).

    The spatiotemporal statistic for period t is z_t'W z_{t-1} / z_{t-1}'z_{t-1}
    with z the cross-sectionally demeaned outcomes.
    """
    ystar = log_square(panel.y)
    n, periods = ystar.shape
    lags = min(lags or settings.acf_lags, periods - 1)
    acfs = np.full((n, lags), np.nan)
    for i in range(n):
        if np.ptp(ystar[i]) > 0.0:
            acfs[i] = acf(ystar[i], nlags=lags, fft=False)[1:]

    W = moran_matrix(weights)
    z = ystar - ystar.mean(axis=0, keepdims=True)
    st = np.full(periods - 1, np.nan)
    for t in range(1, periods):
        denom = float(z[:, t - 1] @ z[:, t - 1])
        if denom > 0.0:
            st[t - 1] = float(z[:, t] @ (W @ z[:, t - 1])) / denom
    return PanelDescriptives(mean_log_square=ystar.mean(axis=1), acf=acfs, st_moran=st)


@dataclass(frozen=True, eq=False)
class VolatilityEstimate:
    """Fitted conditional variances h_it for t = 1..T.

    :param log_h: n x T fitted log-volatilities
    :param mu_eps: Level normalization making mean(y^2 / h) one
    """

    log_h: np.ndarray
    mu_eps: float

    @property
    def h(self) -> np.ndarray:
        return np.exp(self.log_h)

    @property
    def by_location(self) -> pd.Series:
        return pd.Series(self.h.mean(axis=1), name="mean_h").rename_axis("location")

    @property
    def by_period(self) -> pd.Series:
        series = pd.Series(self.h.mean(axis=0), name="mean_h")
        series.index = pd.RangeIndex(1, self.h.shape[1] + 1, name="period")
        return series


def estimate_volatility(
    fit: Union[GmmFit, np.ndarray], data: EstimationData
) -> VolatilityEstimate:
    """log h_t = Y*_t - e*_t + mu_eps with e*_t = vartheta_t - mu - alpha_t 1.

    mu_eps = log mean exp(e*) so that the squared outcomes scaled by h
    average one.

    :param fit: Fitted model or its theta vector
    :type fit: Union[GmmFit, np.ndarray]
    :param data: The data it was fitted on
    :type data: EstimationData
    :return: Fitted volatilities
    :rtype: VolatilityEstimate
    """
    theta = fit.vector if isinstance(fit, GmmFit) else np.asarray(fit, dtype=float)
    alpha, mu = recover_effects(theta, data)
    shocks = raw_residuals(theta, data) - mu[None, :] - alpha[:, None]
    mu_eps = float(np.log(np.mean(np.exp(shocks))))
    log_h = (data.Yraw - shocks + mu_eps).T
    return VolatilityEstimate(log_h=log_h, mu_eps=mu_eps)


__all__ = [
    "PanelDescriptives",
    "ResidualDiagnostics",
    "VolatilityEstimate",
    "attach_diagnostics",
    "diagnose_residuals",
    "estimate_volatility",
    "moran_matrix",
    "moran_permutation_test",
    "morans_i",
    "panel_descriptives",
    "residual_diagnostics",
]
