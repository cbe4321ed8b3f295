"""Estimator suite: 2SLS, initial GMM, optimal GMM and feasible best GMM.

Every estimator takes an ``EstimationData`` built by ``prepare_data`` and
returns an immutable ``GmmFit``. Later stages reuse earlier ones:

    2SLS -> initial GMM (identity weight) -> optimal GMM (Omega^{-1})
                                          -> best GMM (Q*, P*, Omega^{-1})
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import scipy.linalg as la
from scipy import stats

from src.config.settings import settings
from src.estimation import covariance
from src.estimation.instruments import best_instruments, best_quadratic
from src.estimation.moments import (
    EstimationData,
    IdentificationReport,
    MomentFunction,
    MomentSet,
    default_iv,
    differenced_residuals,
    identification_diagnostic,
    mu4_hat,
    omega_hat,
    raw_residuals,
    residuals,
    sigma2_hat,
)
from src.estimation.optimizer import GmmObjective, OptimizationResult, minimize
from src.estimation.transforms import helmert
from src.model.core import StationarityReport, build_operators, check_stationarity
from src.models.base_models import Theta, VcovForm
from src.utils.errors import ConfigError, UnderIdentificationError
from src.utils.logging import get_logger

logger = get_logger("estimators")


@dataclass(frozen=True)
class StageRecord:
    """Convergence record of one pipeline stage."""

    stage: str
    objective: float
    converged: bool
    nfev: int = 0
    start_index: int = 0
    gradient_norm: float = 0.0


@dataclass(frozen=True, eq=False)
class GmmFit:
    """Result of one estimator stage.

    :param theta_hat: Estimated parameters
    :param vector: The same, in canonical order
    :param vcov: Covariance of the estimates
    :param se: Standard errors, sqrt(diag(vcov))
    :param objective: Objective at the estimate (0 for 2SLS)
    :param stage: ``2sls``, ``initial``, ``optimal`` or ``best``
    :param vcov_form: Covariance formula used
    :param labels: Parameter names in canonical order
    :param sigma2: Residual variance plug-in at the estimate
    :param mu4: Fourth-moment plug-in at the estimate
    :param alpha_hat: Time effects alpha_1..alpha_T
    :param mu_hat: Unit effects (including the error-mean shift)
    :param moment_report: Moment value, Omega condition and ridge
    :param stationarity: Sufficient-condition check at the estimate
    :param identification: Rank diagnostics of the linear moments
    :param ladder: Convergence records of this and all preceding stages
    :param diagnostics: Residual diagnostics, when attached
    """

    theta_hat: Theta
    vector: np.ndarray
    vcov: np.ndarray
    se: np.ndarray
    objective: float
    stage: str
    vcov_form: str
    labels: Tuple[str, ...]
    n: int
    T: int
    sigma2: float
    mu4: float
    alpha_hat: np.ndarray
    mu_hat: np.ndarray
    moment_report: Dict[str, Any]
    stationarity: StationarityReport
    identification: Optional[IdentificationReport]
    ladder: Tuple[StageRecord, ...] = field(default=())
    diagnostics: Optional[Any] = None

    @property
    def tstats(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.vector / self.se

    def summary_frame(self) -> pd.DataFrame:
        """Estimate, SE, t-statistic and two-sided normal p-value per parameter."""
        t = self.tstats
        return pd.DataFrame(
            {
                "estimate": self.vector,
                "se": self.se,
                "t": t,
                "p_value": 2.0 * stats.norm.sf(np.abs(t)),
            },
            index=pd.Index(self.labels, name="parameter"),
        )


@dataclass(frozen=True, eq=False)
class _Context:
    theta: np.ndarray
    ops: Any
    alpha: np.ndarray
    mu: np.ndarray
    alpha_star: np.ndarray
    L: np.ndarray


def recover_effects(
    fit: Union[GmmFit, np.ndarray], data: EstimationData
) -> Tuple[np.ndarray, np.ndarray]:
    """Recover time and unit effects from a fitted theta.

    vartheta_t = S(rho) Y*_t - Z*_t eta; alpha_t is its cross-sectional mean
    and mu the time average of the demeaned vartheta_t, which imposes
    1'(mu + mu_eps 1) = 0. Without time effects alpha is zero and mu absorbs
    the error-mean shift.

    :param fit: A fit or a theta vector
    :type fit: Union[GmmFit, np.ndarray]
    :param data: Prepared data
    :type data: EstimationData
    :return: (alpha_hat of length T, mu_hat of length n)
    :rtype: Tuple[np.ndarray, np.ndarray]
    """
    theta = fit.vector if isinstance(fit, GmmFit) else np.asarray(fit, dtype=float)
    vartheta = raw_residuals(theta, data)
    if not data.spec.has_time_effects:
        return np.zeros(data.T), vartheta.mean(axis=0)
    alpha = vartheta.mean(axis=1)
    mu = (vartheta - alpha[:, None]).mean(axis=0)
    return alpha, mu


def _context(data: EstimationData, theta: np.ndarray) -> _Context:
    spec = data.spec
    ops = build_operators(spec, Theta.from_vector(theta, spec), data.weights)
    alpha, mu = recover_effects(theta, data)
    alpha_star = helmert(alpha[None, :])[0] if data.demean else np.zeros(data.T - 1)
    L = covariance.expected_spatial_lags(data, theta, ops, alpha_star)
    return _Context(theta=theta, ops=ops, alpha=alpha, mu=mu, alpha_star=alpha_star, L=L)


def _plugins(data: EstimationData, theta: np.ndarray) -> Tuple[float, float, Dict[str, Any]]:
    sigma2 = sigma2_hat(residuals(theta, data), data)
    if sigma2 <= settings.exact_fit_sigma2:
        logger.warning(
            "Residual variance vanished; weighting with unit variance and gaussian kurtosis",
            extra={"sigma2": sigma2},
        )
        return 1.0, 3.0, {"exact_fit": True, "mu4_clamped": False}
    mu4, clamped = mu4_hat(differenced_residuals(theta, data), sigma2, data)
    return sigma2, mu4, {"exact_fit": False, "mu4_clamped": clamped}


def _resolve_vcov_form(data: EstimationData, vcov_form: VcovForm) -> str:
    if vcov_form != "auto":
        return vcov_form
    return "finite_t" if data.T - 1 < settings.finite_t_threshold else "large_t"


def _build_fit(
    data: EstimationData,
    theta: np.ndarray,
    vcov: np.ndarray,
    objective: float,
    stage: str,
    vcov_form: str,
    sigma2: float,
    mu4: float,
    ctx: _Context,
    moments: MomentSet,
    report: Dict[str, Any],
    ladder: Tuple[StageRecord, ...],
) -> GmmFit:
    spec = data.spec
    theta_obj = Theta.from_vector(theta, spec)
    se = np.sqrt(np.clip(np.diag(vcov), 0.0, None))
    identification = identification_diagnostic(data, moments, ctx.L)
    g = MomentFunction(data, moments).value(theta) / data.N
    report = {
        "moment_set": moments.label,
        "m": moments.m,
        "k_q": moments.k_q,
        "g_norm": float(np.linalg.norm(g)),
        **report,
    }
    logger.info(
        "Estimation stage finished",
        extra={"stage": stage, "objective": objective, "theta": theta.tolist()},
    )
    return GmmFit(
        theta_hat=theta_obj,
        vector=np.asarray(theta, dtype=float),
        vcov=vcov,
        se=se,
        objective=float(objective),
        stage=stage,
        vcov_form=vcov_form,
        labels=tuple(spec.param_labels()),
        n=data.n,
        T=data.T,
        sigma2=float(sigma2),
        mu4=float(mu4),
        alpha_hat=ctx.alpha,
        mu_hat=ctx.mu,
        moment_report=report,
        stationarity=check_stationarity(spec, theta_obj, data.weights),
        identification=identification,
        ladder=ladder,
    )


def _record(stage: str, result: OptimizationResult) -> StageRecord:
    return StageRecord(
        stage=stage,
        objective=result.objective,
        converged=True,
        nfev=result.nfev,
        start_index=result.start_index,
        gradient_norm=result.gradient_norm,
    )


def fit_2sls(data: EstimationData, moments: Optional[MomentSet] = None) -> GmmFit:
    """Closed-form 2SLS with M_Q = JQ(Q'JQ)^{-1}Q'J.

    :param data: Prepared data
    :type data: EstimationData
    :param moments: Instruments; the default IV set if omitted
    :type moments: Optional[MomentSet]
    :return: The 2SLS fit
    :rtype: GmmFit
    :raises UnderIdentificationError: If Q'JQ or the projected regressor
        cross-product is singular
    """
    moments = moments or default_iv(data)
    JQ = data.project(moments.Q)
    qq = np.einsum("tnq,tnr->qr", JQ, JQ)
    qr = np.einsum("tnq,tnk->qk", JQ, data.R)
    qy = np.einsum("tnq,tn->q", JQ, data.Y2)
    try:
        qq_factor = la.cho_factor(qq)
        bread = qr.T @ la.cho_solve(qq_factor, qr)
        theta = la.solve(bread, qr.T @ la.cho_solve(qq_factor, qy), assume_a="sym")
    except la.LinAlgError as exc:
        raise UnderIdentificationError(f"2SLS normal equations are singular: {exc}", field="Q") from exc

    sigma2 = sigma2_hat(residuals(theta, data), data)
    ctx = _context(data, theta)
    vcov = covariance.tsls_vcov(data, moments, sigma2, ctx.L)
    record = StageRecord(stage="2sls", objective=0.0, converged=True)
    return _build_fit(
        data, theta, vcov, 0.0, "2sls", "tsls", sigma2, float("nan"), ctx, moments,
        {"exact_fit": sigma2 <= settings.exact_fit_sigma2}, (record,),
    )


def _starts(*candidates: Optional[np.ndarray]) -> List[np.ndarray]:
    out: List[np.ndarray] = []
    for cand in candidates:
        if cand is None:
            continue
        cand = np.asarray(cand, dtype=float)
        if not any(np.array_equal(cand, seen) for seen in out):
            out.append(cand)
    return out


def fit_initial_gmm(
    data: EstimationData,
    moments: Optional[MomentSet] = None,
    tsls: Optional[GmmFit] = None,
) -> GmmFit:
    """Minimize g'g with the default linear and quadratic moments.

    Starts from the 2SLS estimate and from zero. The reported covariance is
    the sandwich form valid for identity weighting.

    :param data: Prepared data
    :type data: EstimationData
    :param moments: Moment set; default IV and quadratic matrices if omitted
    :type moments: Optional[MomentSet]
    :param tsls: Precomputed 2SLS fit supplying a starting point
    :type tsls: Optional[GmmFit]
    :return: The initial GMM fit
    :rtype: GmmFit
    :raises ConvergenceError: If no start converges
    """
    moments = moments or default_iv(data)
    tsls = tsls or fit_2sls(data, moments)
    moment_fn = MomentFunction(data, moments)
    objective = GmmObjective(moment_fn)
    result = minimize(objective, _starts(tsls.vector, np.zeros(data.K)))
    theta = result.theta

    sigma2, mu4, flags = _plugins(data, theta)
    omega = omega_hat(data, moments, sigma2, mu4)
    D = moment_fn.jacobian(theta) / data.N
    vcov = covariance.sandwich_vcov(D, omega, data.N)
    ctx = _context(data, theta)
    return _build_fit(
        data, theta, vcov, result.objective, "initial", "sandwich", sigma2, mu4, ctx, moments,
        {**flags, "omega_condition": omega.condition, "omega_ridge": omega.ridge},
        tsls.ladder + (_record("initial", result),),
    )


def fit_optimal_gmm(
    data: EstimationData,
    initial: Optional[GmmFit] = None,
    vcov_form: VcovForm = "auto",
    moments: Optional[MomentSet] = None,
    tsls: Optional[GmmFit] = None,
) -> GmmFit:
    """Minimize g'Omega^{-1}g with Omega built from the initial fit.

    The covariance is (D'Omega^{-1}D)^{-1}/N with D = D_1 (large T) or
    D_1 + D_2 (finite T); ``auto`` picks finite T when T-1 is below the
    configured threshold.

    :param data: Prepared data
    :type data: EstimationData
    :param initial: Initial GMM fit; computed if omitted
    :type initial: Optional[GmmFit]
    :param vcov_form: ``auto``, ``large_t`` or ``finite_t``
    :type vcov_form: VcovForm
    :param moments: Moment set; default IV and quadratic matrices if omitted
    :type moments: Optional[MomentSet]
    :param tsls: 2SLS fit used as an extra starting point
    :type tsls: Optional[GmmFit]
    :return: The optimal GMM fit
    :rtype: GmmFit
    :raises WeightingError: If Omega cannot be inverted
    :raises ConvergenceError: If no start converges
    """
    moments = moments or default_iv(data)
    initial = initial or fit_initial_gmm(data, moments)
    sigma2_w, mu4_w, _ = _plugins(data, initial.vector)
    omega = omega_hat(data, moments, sigma2_w, mu4_w)
    objective = GmmObjective(MomentFunction(data, moments), omega.whiten)
    tsls_start = tsls.vector if tsls is not None else None
    result = minimize(objective, _starts(initial.vector, tsls_start, np.zeros(data.K)))
    theta = result.theta

    sigma2, mu4, flags = _plugins(data, theta)
    ctx = _context(data, theta)
    form = _resolve_vcov_form(data, vcov_form)
    D = covariance.d1_matrix(data, moments, sigma2, ctx.ops, ctx.L)
    if form == "finite_t":
        D = D + covariance.d2_matrix(data, moments, sigma2, ctx.ops, theta)
    vcov = covariance.efficient_vcov(D, omega, data.N)
    return _build_fit(
        data, theta, vcov, result.objective, "optimal", form, sigma2, mu4, ctx, moments,
        {**flags, "omega_condition": omega.condition, "omega_ridge": omega.ridge},
        initial.ladder + (_record("optimal", result),),
    )


def fit_best_gmm(
    data: EstimationData,
    initial: Optional[GmmFit] = None,
    power_tol: Optional[float] = None,
    tsls: Optional[GmmFit] = None,
) -> GmmFit:
    """Feasible best GMM with the moments (Q*, P*) built at the initial fit.

    The covariance is Sigma*^{-1}/N evaluated at the final estimate.

    :param data: Prepared data
    :type data: EstimationData
    :param initial: Initial GMM fit; computed if omitted
    :type initial: Optional[GmmFit]
    :param power_tol: Truncation of the A power series in H_t
    :type power_tol: Optional[float]
    :param tsls: 2SLS fit used as an extra starting point
    :type tsls: Optional[GmmFit]
    :return: The best GMM fit
    :rtype: GmmFit
    """
    initial = initial or fit_initial_gmm(data)
    sigma2_w, mu4_w, _ = _plugins(data, initial.vector)
    prelim = _context(data, initial.vector)
    best = best_instruments(
        data, initial.vector, prelim.ops, mu4_w / sigma2_w ** 2, prelim.alpha, power_tol
    )
    omega = omega_hat(data, best, sigma2_w, mu4_w)
    objective = GmmObjective(MomentFunction(data, best), omega.whiten)
    tsls_start = tsls.vector if tsls is not None else None
    result = minimize(objective, _starts(initial.vector, tsls_start, np.zeros(data.K)))
    theta = result.theta

    sigma2, mu4, flags = _plugins(data, theta)
    ctx = _context(data, theta)
    P_star = best_quadratic(data, ctx.ops, mu4 / sigma2 ** 2)
    precision = covariance.best_precision(data, sigma2, ctx.ops, P_star, ctx.L)
    vcov = covariance.best_vcov(precision, data.N)
    return _build_fit(
        data, theta, vcov, result.objective, "best", "best", sigma2, mu4, ctx, best,
        {**flags, "omega_condition": omega.condition, "omega_ridge": omega.ridge},
        initial.ladder + (_record("best", result),),
    )


def fit_stage(
    data: EstimationData,
    stage: str,
    vcov_form: VcovForm = "auto",
) -> GmmFit:
    """Run the pipeline up to ``stage`` and return that stage's fit.

    :param data: Prepared data
    :type data: EstimationData
    :param stage: ``2sls``, ``initial``, ``optimal`` or ``best``
    :type stage: str
    :param vcov_form: Covariance form for the optimal stage
    :type vcov_form: VcovForm
    :return: The requested fit
    :rtype: GmmFit
    """
    moments = default_iv(data)
    tsls = fit_2sls(data, moments)
    if stage == "2sls":
        return tsls
    initial = fit_initial_gmm(data, moments, tsls)
    if stage == "initial":
        return initial
    if stage == "optimal":
        return fit_optimal_gmm(data, initial, vcov_form, moments, tsls)
    if stage == "best":
        return fit_best_gmm(data, initial, tsls=tsls)
    raise ConfigError(f"unknown stage {stage!r}", field="stage")


__all__ = [
    "GmmFit",
    "StageRecord",
    "fit_2sls",
    "fit_best_gmm",
    "fit_initial_gmm",
    "fit_optimal_gmm",
    "fit_stage",
    "recover_effects",
]
