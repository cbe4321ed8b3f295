"""Feasible best linear and quadratic moments.

The best instrument for the transformed lag Y**,-1_{t-1} is its conditional
expectation H_t, built from powers of A, forward sums of the exogenous part
and a running estimate of the unit effects. The best quadratic matrices are
centered versions of G_j with a kurtosis-dependent diagonal correction.
"""

from typing import List, Optional

import numpy as np

from src.config.settings import settings
from src.estimation.moments import EstimationData, MomentSet, raw_residuals
from src.estimation.transforms import helmert
from src.model.core import Operators
from src.utils.errors import DataError
from src.utils.logging import get_logger

logger = get_logger("instruments")


def kurtosis_constant(n: int, eta4: float, demean: bool) -> float:
    """Weight of the diagonal correction in P*.

    With time effects: (n/(n-2))^2 (1/(n/(n-2) + (eta4-3)/2) - (n-2)/n).
    Without: -(eta4-3)/(eta4-1), the large-n limit of the same expression.
    Both vanish at eta4 = 3.
    """
    if eta4 == 3.0:
        return 0.0
    if demean:
        ratio = n / (n - 2.0)
        return ratio ** 2 * (1.0 / (ratio + (eta4 - 3.0) / 2.0) - 1.0 / ratio)
    return -(eta4 - 3.0) / (eta4 - 1.0)


def best_quadratic(data: EstimationData, ops: Operators, eta4: float) -> List[np.ndarray]:
    """P*_j = (G_j - tr(G_j J)/tr(J) J) + c (Diag(J G_j J) - tr(G_j J)/n I).

    :param data: Prepared data
    :type data: EstimationData
    :param ops: Operators at the preliminary estimate
    :type ops: Operators
    :param eta4: Kurtosis ratio mu4 / sigma^4
    :type eta4: float
    :return: p matrices, one per G_j
    :rtype: List[np.ndarray]
    """
    J, n = data.J, data.n
    c = kurtosis_constant(n, eta4, data.demean)
    out = []
    for G in ops.G:
        trace_gj = np.trace(G @ J)
        P = G - (trace_gj / data.trace_J) * J
        if c != 0.0:
            P = P + c * (np.diag(np.diag(J @ G @ J)) - (trace_gj / n) * np.eye(n))
        out.append(P)
    return out


def _power_partial_sums(A: np.ndarray, count: int, tol: float) -> List[np.ndarray]:
    # partial[k] = sum_{h=0}^{k} A^h for k = 0..count-1
    n = A.shape[0]
    partial = [np.eye(n)]
    power = np.eye(n)
    active = True
    for _ in range(1, count):
        if active:
            power = power @ A
            if np.abs(power).sum(axis=1).max() < tol:
                active = False
        partial.append(partial[-1] + power if active else partial[-1])
    return partial


def expected_lags(
    data: EstimationData,
    theta: np.ndarray,
    ops: Operators,
    alpha: np.ndarray,
    power_tol: Optional[float] = None,
) -> np.ndarray:
    """H_t, the conditional-mean approximation of Y**,-1_{t-1}, t = 1..T-1.

    H_t = c_t [ (I - (1/(T-t)) sum_{h=1}^{T-t} A^h) Y*_{t-1}
                - (1/(T-t)) sum_{r=t}^{T-1} (sum_{h=0}^{T-r-1} A^h) S^{-1} (X_r beta + alpha_r 1)
                - (1/(T-t)) sum_{r=t}^{T-1} (sum_{h=0}^{T-r-1} A^h) S^{-1} mu_t ]

    where mu_t averages S Y*_s - Z*_s eta - alpha_s 1 over s < t; the last
    term is absent for t = 1.

    :param data: Prepared data
    :type data: EstimationData
    :param theta: Preliminary estimate
    :type theta: np.ndarray
    :param ops: Operators at ``theta``
    :type ops: Operators
    :param alpha: Time effects alpha_1..alpha_T
    :type alpha: np.ndarray
    :param power_tol: Truncation of A^h by infinity norm; 0 evaluates every power
    :type power_tol: Optional[float]
    :return: (T-1, n) array
    :rtype: np.ndarray
    """
    tol = settings.power_tol if power_tol is None else power_tol
    T, n, p = data.T, data.n, data.spec.p
    theta = np.asarray(theta, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = theta[2 * p + 1:]
    partial = _power_partial_sums(ops.A, T, tol)

    # w_r = S^{-1}(X_r beta + alpha_r 1), r = 1..T
    exog = np.einsum("nrk,k->rn", data.x, beta) + alpha[:, None]
    w = exog @ ops.S_inv.T
    effects = raw_residuals(theta, data) - alpha[:, None]

    H = np.empty((T - 1, n))
    forward = np.zeros(n)
    kernel = np.zeros((n, n))
    for t in range(T - 1, 0, -1):
        # accumulate r = t..T-1 (r is 1-based; w[r-1])
        forward = forward + partial[T - t - 1] @ w[t - 1]
        kernel = kernel + partial[T - t - 1]
        span = float(T - t)
        level = data.ystar[:, t - 1] - (partial[T - t] - np.eye(n)) @ data.ystar[:, t - 1] / span
        value = level - forward / span
        if t > 1:
            mu_t = effects[:t - 1].mean(axis=0)
            value = value - kernel @ (ops.S_inv @ mu_t) / span
        H[t - 1] = data.c[t - 1] * value
    return H


def best_instruments(
    data: EstimationData,
    theta: np.ndarray,
    ops: Operators,
    eta4: float,
    alpha: Optional[np.ndarray] = None,
    power_tol: Optional[float] = None,
) -> MomentSet:
    """Feasible best moments (Q*, P*) at a preliminary estimate.

    Q*_t = (G_1(K_t eta + alpha*_t 1), .., G_p(K_t eta + alpha*_t 1), K_t) with
    K_t = (H_t, M_1 H_t .. M_p H_t, X*_t).

    :param data: Prepared data
    :type data: EstimationData
    :param theta: Preliminary estimate
    :type theta: np.ndarray
    :param ops: Operators at ``theta``
    :type ops: Operators
    :param eta4: Kurtosis ratio
    :type eta4: float
    :param alpha: Time effects alpha_1..alpha_T; may be omitted when every
        weight matrix is row-normalized or the model has no time effects
    :type alpha: Optional[np.ndarray]
    :param power_tol: Truncation of the A power series
    :type power_tol: Optional[float]
    :return: Moment set labelled ``best``
    :rtype: MomentSet
    :raises DataError: If alpha is needed but not supplied
    """
    if alpha is None:
        if data.demean and not data.weights.all_row_normalized:
            raise DataError(
                "time-effect estimates are required for best instruments with "
                "non-row-normalized weights",
                field="alpha_hat",
            )
        alpha = np.zeros(data.T)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (data.T,):
        raise DataError(f"alpha must have length {data.T}, got {alpha.shape}", field="alpha_hat")

    p = data.spec.p
    theta = np.asarray(theta, dtype=float)
    eta = theta[p:]
    H = expected_lags(data, theta, ops, alpha, power_tol)
    X2 = np.transpose(data.xstar, (1, 0, 2))
    K_blocks = np.concatenate(
        [H[:, :, None]] + [(H @ M.T)[:, :, None] for M in data.weights.mats] + [X2], axis=2
    )
    alpha_star = helmert(alpha[None, :])[0]
    signal = K_blocks @ eta + alpha_star[:, None]
    lags = np.stack([signal @ G.T for G in ops.G], axis=2)
    Q = np.concatenate([lags, K_blocks], axis=2)

    names = [f"G{r + 1}signal" for r in range(p)] + ["H"] + [f"M{j + 1}H" for j in range(p)]
    names += [f"x{j + 1}" for j in range(data.spec.k)]
    return MomentSet(
        Q=Q,
        P=tuple(best_quadratic(data, ops, eta4)),
        label="best",
        q_names=tuple(names),
    )


__all__ = [
    "best_instruments",
    "best_quadratic",
    "expected_lags",
    "kurtosis_constant",
]
