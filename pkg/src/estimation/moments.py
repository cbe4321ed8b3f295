"""Linear and quadratic moment conditions and the GMM weighting matrix.

All N x N objects (J_N = I_{T-1} kron J_n, P_{lN} = I_{T-1} kron P_l) are
represented by their n x n factors. Per-period blocks are stored time-major:
``Y2[t]`` is the transformed outcome of period t+1 and ``R[t]`` the matching
n x K regressor block, ordered like theta:

    R_t = (M_1 Y**_t .. M_p Y**_t, Y**,-1_{t-1}, M_1 Y**,-1_{t-1} .. , X*_t)

so that U*_t(theta) = Y**_t - R_t theta = S(rho) Y**_t - Z**_t eta.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from src.config.settings import settings
from src.models.base_models import ModelSpec
from src.models.panel import Panel
from src.spatial.weights import SpatialWeightSet
from src.estimation.transforms import first_difference, transform_panel
from src.utils.errors import DataError, UnderIdentificationError, WeightingError
from src.utils.logging import get_logger

logger = get_logger("moments")


@dataclass(frozen=True, eq=False)
class EstimationData:
    """A panel prepared for estimation under a given spec and weights.

    :param spec: Model structure
    :param weights: Spatial weights
    :param ystar: n x (T+1) log-squared outcomes
    :param x: n x T x k raw regressors
    :param Y2: (T-1, n) transformed outcomes
    :param R: (T-1, n, K) transformed regressors in theta order
    :param Yraw: (T, n) untransformed outcomes Y*_1..Y*_T
    :param Rraw: (T, n, K) untransformed regressors in theta order
    :param xstar: n x (T-1) x k transformed regressors
    :param c: Helmert constants
    :param demean: Whether J_n is applied (time effects present)
    """

    spec: ModelSpec
    weights: SpatialWeightSet
    ystar: np.ndarray
    x: np.ndarray
    Y2: np.ndarray
    R: np.ndarray
    Yraw: np.ndarray
    Rraw: np.ndarray
    xstar: np.ndarray
    c: np.ndarray
    demean: bool

    @property
    def n(self) -> int:
        return self.ystar.shape[0]

    @property
    def T(self) -> int:
        return self.ystar.shape[1] - 1

    @property
    def N(self) -> int:
        return self.n * (self.T - 1)

    @property
    def K(self) -> int:
        return self.R.shape[2]

    @property
    def J(self) -> np.ndarray:
        """The n x n projection used in place of J_n."""
        if self.demean:
            return np.eye(self.n) - np.full((self.n, self.n), 1.0 / self.n)
        return np.eye(self.n)

    @property
    def trace_J(self) -> float:
        return float(self.n - 1 if self.demean else self.n)

    def project(self, arr: np.ndarray) -> np.ndarray:
        """Apply J along the unit axis (axis 1 of time-major arrays)."""
        if not self.demean:
            return arr
        return arr - arr.mean(axis=1, keepdims=True)


def _spatial_lags(weights: SpatialWeightSet, vecs: np.ndarray) -> List[np.ndarray]:
    # vecs is (T, n); returns one (T, n) block per matrix
    return [vecs @ m.T for m in weights.mats]


def _regressor_block(
    weights: SpatialWeightSet, current: np.ndarray, lag: np.ndarray, x: np.ndarray
) -> np.ndarray:
    cols = _spatial_lags(weights, current) + [lag] + _spatial_lags(weights, lag)
    block = np.stack(cols, axis=2)
    return np.concatenate([block, x], axis=2)


def prepare_data(panel: Panel, weights: SpatialWeightSet, spec: ModelSpec) -> EstimationData:
    """Transform ``panel`` and assemble the per-period regressor blocks.

    :param panel: Observed panel, T >= 3
    :type panel: Panel
    :param weights: Spatial weights, n matching the panel
    :type weights: SpatialWeightSet
    :param spec: Model structure, k matching the panel
    :type spec: ModelSpec
    :return: The prepared data
    :rtype: EstimationData
    :raises DataError: On dimension mismatches or zero outcomes
    """
    if weights.n != panel.n:
        raise DataError(
            f"weights have n={weights.n} but the panel has n={panel.n} units", field="n"
        )
    if weights.p != spec.p:
        raise DataError(f"spec expects p={spec.p} weight matrices, got {weights.p}", field="p")
    if panel.k != spec.k:
        raise DataError(f"spec expects k={spec.k} regressors, panel has {panel.k}", field="k")
    if panel.T < 3:
        raise DataError(f"estimation needs T >= 3 periods after Y_0, got {panel.T}", field="T")

    tp = transform_panel(panel)
    Y2 = tp.ystar2.T
    L2 = tp.ylag2.T
    X2 = np.transpose(tp.xstar, (1, 0, 2))
    R = _regressor_block(weights, Y2, L2, X2)

    Yraw = tp.ystar[:, 1:].T
    Rraw = _regressor_block(weights, Yraw, tp.ystar[:, :-1].T, np.transpose(panel.x, (1, 0, 2)))

    return EstimationData(
        spec=spec,
        weights=weights,
        ystar=tp.ystar,
        x=panel.x,
        Y2=Y2,
        R=R,
        Yraw=Yraw,
        Rraw=Rraw,
        xstar=tp.xstar,
        c=tp.c,
        demean=spec.has_time_effects,
    )


@dataclass(frozen=True, eq=False)
class MomentSet:
    """Linear IV blocks and quadratic matrices defining g_N(theta).

    :param Q: (T-1, n, k_q) instrument blocks
    :param P: Quadratic matrices P_1..P_m
    :param label: Provenance, ``default`` or ``best``
    :param q_names: Column names of Q
    """

    Q: np.ndarray
    P: Tuple[np.ndarray, ...]
    label: str = "default"
    q_names: Tuple[str, ...] = field(default=())

    @property
    def m(self) -> int:
        return len(self.P)

    @property
    def k_q(self) -> int:
        return self.Q.shape[2]

    @property
    def size(self) -> int:
        return self.m + self.k_q


def default_iv(data: EstimationData) -> MomentSet:
    """Default instruments (Y*_{t-1}, MY*_{t-1}, MMY*_{t-1}, X*_t, MX*_t, MMX*_t).

    MM collects every ordered product M_a M_b. Columns whose variance after J
    falls below the configured floor are dropped with a warning. The returned
    set carries the default quadratic matrices.

    :param data: Prepared data
    :type data: EstimationData
    :return: Moment set with k_q = (1+p+p^2)(1+k) columns before drops
    :rtype: MomentSet
    :raises UnderIdentificationError: If fewer than k+2p+1 columns remain
    """
    W = data.weights
    p = W.p
    operators = [("", np.eye(data.n))]
    operators += [(f"M{a + 1}", m) for a, m in enumerate(W.mats)]
    operators += [
        (f"M{a + 1}M{b + 1}", W.mats[a] @ W.mats[b]) for a in range(p) for b in range(p)
    ]

    lag = data.ystar[:, :-2].T  # Y*_{t-1}, t = 1..T-1
    X2 = np.transpose(data.xstar, (1, 0, 2))
    blocks, names = [], []
    for tag, op in operators:
        blocks.append((lag @ op.T)[:, :, None])
        names.append(f"{tag}ylag" if tag else "ylag")
    for tag, op in operators:
        for j in range(data.spec.k):
            blocks.append((X2[:, :, j] @ op.T)[:, :, None])
            names.append(f"{tag}x{j + 1}" if tag else f"x{j + 1}")
    Q = np.concatenate(blocks, axis=2)

    variances = data.project(Q).reshape(-1, Q.shape[2]).var(axis=0)
    keep = variances >= settings.iv_variance_floor
    if not np.all(keep):
        dropped = [name for name, k in zip(names, keep) if not k]
        logger.warning("Dropped near-constant instrument columns", extra={"columns": dropped})
        Q = Q[:, :, keep]
        names = [name for name, k in zip(names, keep) if k]

    needed = data.spec.k + 2 * p + 1
    if Q.shape[2] < needed:
        raise UnderIdentificationError(
            f"only {Q.shape[2]} usable instruments, at least {needed} required", field="Q"
        )
    return MomentSet(Q=Q, P=tuple(default_quadratic(data)), label="default", q_names=tuple(names))


def _center(mat: np.ndarray, data: EstimationData) -> np.ndarray:
    # mat - tr(mat J)/tr(J) J, so that tr(J P J) = 0
    J = data.J
    return mat - (np.trace(mat @ J) / data.trace_J) * J


def default_quadratic(data: EstimationData) -> List[np.ndarray]:
    """P_j = M_j - tr(M_j J)/tr(J) J and P_{j+p} likewise for M_j^2.

    :param data: Prepared data (supplies weights and J)
    :type data: EstimationData
    :return: 2p matrices ordered M_1..M_p based, then M_1^2..M_p^2 based
    :rtype: List[np.ndarray]
    """
    W = data.weights
    return [_center(m, data) for m in W.mats] + [_center(m2, data) for m2 in W.squares]


def residuals(theta: np.ndarray, data: EstimationData) -> np.ndarray:
    """U*_t(theta) = S(rho) Y**_t - Z**_t eta, as a (T-1, n) array.

    The alpha*_t term is omitted; every use is J-projected.
    """
    theta = np.asarray(theta, dtype=float)
    return data.Y2 - data.R @ theta


def raw_residuals(theta: np.ndarray, data: EstimationData) -> np.ndarray:
    """vartheta_t = S(rho) Y*_t - Z*_t eta for t = 1..T, as a (T, n) array."""
    theta = np.asarray(theta, dtype=float)
    return data.Yraw - data.Rraw @ theta


def _sandwiched(P: Sequence[np.ndarray], data: EstimationData) -> List[np.ndarray]:
    J = data.J
    return [J @ Pl @ J for Pl in P]


def moment_vector(theta: np.ndarray, data: EstimationData, moments: MomentSet) -> np.ndarray:
    """g_N(theta) = [U'J P_l J U, l = 1..m ; Q'J U], summed over periods.

    :param theta: Parameter vector in canonical order
    :type theta: np.ndarray
    :param data: Prepared data
    :type data: EstimationData
    :param moments: Moment set
    :type moments: MomentSet
    :return: Vector of length m + k_q
    :rtype: np.ndarray
    """
    if moments.Q.shape[:2] != data.Y2.shape:
        raise DataError(
            f"instrument blocks have shape {moments.Q.shape[:2]}, data {data.Y2.shape}", field="Q"
        )
    U = residuals(theta, data)
    quad = [float(np.sum(U * (U @ B.T))) for B in _sandwiched(moments.P, data)]
    lin = np.einsum("tnq,tn->q", data.project(moments.Q), U)
    return np.concatenate([quad, lin])


def moment_jacobian(theta: np.ndarray, data: EstimationData, moments: MomentSet) -> np.ndarray:
    """Analytic d g_N / d theta', shape (m + k_q) x K.

    Rows: -sum_t U_t'(J P_l J)^s R_t for the quadratic moments and
    -sum_t Q_t'J R_t for the linear ones.
    """
    U = residuals(theta, data)
    rows = []
    for B in _sandwiched(moments.P, data):
        Bs = B + B.T
        rows.append(-np.einsum("tn,tnk->k", U @ Bs, data.R))
    lin = -np.einsum("tnq,tnk->qk", data.project(moments.Q), data.R)
    if rows:
        return np.vstack([np.vstack(rows), lin])
    return lin


class MomentFunction:
    """g_N(theta) compiled into its quadratic-polynomial coefficients.

    Each quadratic moment is c_l - 2 b_l'theta + theta'H_l theta and the
    linear block is a - D theta, so evaluation costs O(m K^2) regardless of
    the panel size.

    :param data: Prepared data
    :type data: EstimationData
    :param moments: Moment set
    :type moments: MomentSet
    """

    def __init__(self, data: EstimationData, moments: MomentSet):
        self.data = data
        self.moments = moments
        Y, R = data.Y2, data.R
        consts, lins, hessians = [], [], []
        for B in _sandwiched(moments.P, data):
            Bsym = 0.5 * (B + B.T)
            BY = Y @ Bsym
            BR = np.einsum("ij,tjk->tik", Bsym, R)
            consts.append(float(np.sum(Y * BY)))
            lins.append(np.einsum("tnk,tn->k", R, BY))
            hessians.append(np.einsum("tnk,tnl->kl", R, BR))
        K = data.K
        self.quad_const = np.asarray(consts)
        self.quad_lin = np.asarray(lins).reshape(-1, K)
        self.quad_hess = np.asarray(hessians).reshape(-1, K, K)
        JQ = data.project(moments.Q)
        self.lin_const = np.einsum("tnq,tn->q", JQ, Y)
        self.lin_slope = np.einsum("tnq,tnk->qk", JQ, R)

    @property
    def size(self) -> int:
        return self.moments.size

    def value(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        quad = (
            self.quad_const
            - 2.0 * self.quad_lin @ theta
            + np.einsum("k,lkj,j->l", theta, self.quad_hess, theta)
        )
        lin = self.lin_const - self.lin_slope @ theta
        return np.concatenate([quad, lin])

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        quad = -2.0 * self.quad_lin + 2.0 * np.einsum("lkj,j->lk", self.quad_hess, theta)
        return np.vstack([quad, -self.lin_slope])


def sigma2_hat(U: np.ndarray, data: EstimationData) -> float:
    """sigma^2 = (1/N) sum_t U_t'J U_t.

    :param U: (T-1, n) transformed residuals
    :type U: np.ndarray
    :param data: Prepared data
    :type data: EstimationData
    :return: Non-negative variance estimate
    :rtype: float
    """
    JU = data.project(np.asarray(U, dtype=float))
    return float(np.sum(JU * JU) / data.N)


def mu4_hat(dV: np.ndarray, sigma2: float, data: EstimationData) -> Tuple[float, bool]:
    """mu4 = (1/2N) sum_i sum_t ([J dV_t]_i)^4 - 3 sigma^4.

    The implied kurtosis ratio mu4/sigma^4 is clamped below at the configured
    floor (mu4 >= sigma^4 by Jensen); clamping is logged.

    :param dV: (T-1, n) first differences of the untransformed residuals
    :type dV: np.ndarray
    :param sigma2: Variance estimate
    :type sigma2: float
    :param data: Prepared data
    :type data: EstimationData
    :return: The estimate and whether it was clamped
    :rtype: Tuple[float, bool]
    """
    JdV = data.project(np.asarray(dV, dtype=float))
    mu4 = float(np.sum(JdV ** 4) / (2.0 * JdV.size) - 3.0 * sigma2 ** 2)
    floor = settings.kurtosis_floor * sigma2 ** 2
    if mu4 < floor:
        logger.warning(
            "Kurtosis estimate clamped at its lower bound",
            extra={"mu4": mu4, "sigma2": sigma2},
        )
        return floor, True
    return mu4, False


def differenced_residuals(theta: np.ndarray, data: EstimationData) -> np.ndarray:
    """S(rho) dY*_t - dZ*_t eta for t = 2..T, as a (T-1, n) array."""
    return first_difference(raw_residuals(theta, data).T).T


@dataclass(frozen=True, eq=False)
class OmegaHat:
    """Plug-in covariance of g_N / sqrt(N) and its Cholesky factor.

    :param matrix: The (possibly ridged) symmetric matrix
    :param chol: Lower Cholesky factor of ``matrix``
    :param rcond: Reciprocal condition number before any ridge
    :param ridge: Ridge added to the diagonal (0 if none)
    """

    matrix: np.ndarray
    chol: np.ndarray
    rcond: float
    ridge: float

    @property
    def condition(self) -> float:
        return float(np.inf if self.rcond == 0 else 1.0 / self.rcond)

    def whiten(self, arr: np.ndarray) -> np.ndarray:
        """C^{-1} arr with C C' = Omega, so |C^{-1} g|^2 = g'Omega^{-1} g."""
        return la.solve_triangular(self.chol, arr, lower=True)

    def solve(self, arr: np.ndarray) -> np.ndarray:
        """Omega^{-1} arr."""
        return la.cho_solve((self.chol, True), arr)


def omega_hat(
    data: EstimationData,
    moments: MomentSet,
    sigma2: float,
    mu4: float,
) -> OmegaHat:
    """Plug-in Omega for the stacked moments.

    Quadratic block (l, j): [sigma^4 tr(B_l (B_j + B_j')) +
    (mu4 - 3 sigma^4) diag(B_l)'diag(B_j)] (T-1) / N with B_l = J P_l J;
    linear block sigma^2 Q'J Q / N; cross blocks zero.

    :param data: Prepared data
    :type data: EstimationData
    :param moments: Moment set
    :type moments: MomentSet
    :param sigma2: Variance plug-in, must be positive
    :type sigma2: float
    :param mu4: Fourth-moment plug-in
    :type mu4: float
    :return: Omega with its factorization
    :rtype: OmegaHat
    :raises WeightingError: If sigma2 <= 0 or Omega cannot be factorized
    """
    if not sigma2 > 0:
        raise WeightingError(f"Omega needs sigma^2 > 0, got {sigma2}", field="sigma2")
    m, kq = moments.m, moments.k_q
    omega = np.zeros((m + kq, m + kq))

    Bs = _sandwiched(moments.P, data)
    diags = [np.diag(B) for B in Bs]
    periods = data.T - 1
    excess = mu4 - 3.0 * sigma2 ** 2
    for l in range(m):
        for j in range(l, m):
            value = sigma2 ** 2 * np.sum(Bs[l] * (Bs[j] + Bs[j].T).T) + excess * diags[l] @ diags[j]
            omega[l, j] = omega[j, l] = value * periods / data.N

    JQ = data.project(moments.Q)
    omega[m:, m:] = sigma2 * np.einsum("tnq,tnr->qr", JQ, JQ) / data.N
    omega = 0.5 * (omega + omega.T)

    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.linalg.cond(omega)
    rcond = 0.0 if not np.isfinite(cond) else 1.0 / cond
    ridge = 0.0
    if rcond < settings.omega_rcond:
        ridge = settings.omega_ridge * float(np.mean(np.diag(omega)))
        omega = omega + ridge * np.eye(m + kq)
        logger.warning("Ridge added to an ill-conditioned Omega", extra={"rcond": rcond, "ridge": ridge})
    try:
        chol = la.cholesky(omega, lower=True)
    except la.LinAlgError as exc:
        raise WeightingError(f"Omega is not positive definite: {exc}", field="omega") from exc
    return OmegaHat(matrix=omega, chol=chol, rcond=rcond, ridge=ridge)


@dataclass(frozen=True)
class IdentificationReport:
    """Rank diagnostics of the linear moments.

    :param min_singular: Smallest singular value of Q'J(Z, L)/N
    :param condition: Condition number of Q'J(Z, L)/N
    :param iv_condition: Condition number of Q'J Q/N
    :param flagged: Whether either condition exceeds the threshold
    """

    min_singular: float
    condition: float
    iv_condition: float
    flagged: bool


def identification_diagnostic(
    data: EstimationData, moments: MomentSet, L: np.ndarray
) -> IdentificationReport:
    """Singular-value check of Q'J(Z, L)/N and Q'JQ/N.

    :param data: Prepared data
    :type data: EstimationData
    :param moments: Moment set supplying Q
    :type moments: MomentSet
    :param L: (T-1, n, p) expected spatial lags G_r(Z**_t eta + alpha*_t 1)
    :type L: np.ndarray
    :return: The condition report
    :rtype: IdentificationReport
    """
    JQ = data.project(moments.Q)
    Z = data.R[:, :, data.spec.p:]
    ZL = np.concatenate([Z, L], axis=2)
    cross = np.einsum("tnq,tnk->qk", JQ, ZL) / data.N
    gram = np.einsum("tnq,tnr->qr", JQ, JQ) / data.N

    sv = np.linalg.svd(cross, compute_uv=False)
    min_sv = float(sv[-1]) if sv.size >= ZL.shape[2] else 0.0
    condition = float(np.inf if min_sv == 0 else sv[0] / min_sv)
    with np.errstate(divide="ignore", invalid="ignore"):
        iv_condition = float(np.linalg.cond(gram))
    if not np.isfinite(iv_condition):
        iv_condition = float(np.inf)

    threshold = settings.identification_threshold
    flagged = condition > threshold or iv_condition > threshold
    if flagged:
        logger.warning(
            "Weak or failed identification",
            extra={"condition": condition, "iv_condition": iv_condition},
        )
    return IdentificationReport(
        min_singular=min_sv, condition=condition, iv_condition=iv_condition, flagged=flagged
    )


__all__ = [
    "EstimationData",
    "IdentificationReport",
    "MomentFunction",
    "MomentSet",
    "OmegaHat",
    "default_iv",
    "default_quadratic",
    "differenced_residuals",
    "identification_diagnostic",
    "moment_jacobian",
    "moment_vector",
    "mu4_hat",
    "omega_hat",
    "prepare_data",
    "raw_residuals",
    "residuals",
    "sigma2_hat",
]
