"""Asymptotic covariance matrices of the estimators.

D denotes the expected Jacobian of g_N / N and Omega the covariance of
g_N / sqrt(N); every returned covariance is already divided by N.
"""

from typing import Sequence

import numpy as np
import scipy.linalg as la

from src.config.settings import settings
from src.estimation.moments import EstimationData, MomentSet, OmegaHat
from src.model.core import Operators
from src.utils.logging import get_logger

logger = get_logger("covariance")

INVALID_INFERENCE_MSG = (
    "Covariance bread is singular; standard errors use a pseudo-inverse and are unreliable"
)


def _robust_inverse(matrix: np.ndarray) -> np.ndarray:
    try:
        out = la.inv(matrix)
        if np.all(np.isfinite(out)):
            return out
    except la.LinAlgError:
        pass
    logger.warning(INVALID_INFERENCE_MSG)
    return np.linalg.pinv(matrix)


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def expected_spatial_lags(
    data: EstimationData, theta: np.ndarray, ops: Operators, alpha_star: np.ndarray
) -> np.ndarray:
    """L_{r,t} = G_r (Z**_t eta + alpha*_t 1), as a (T-1, n, p) array.

    :param data: Prepared data
    :type data: EstimationData
    :param theta: Parameter vector
    :type theta: np.ndarray
    :param ops: Operators at theta
    :type ops: Operators
    :param alpha_star: Helmert-transformed time effects (length T-1)
    :type alpha_star: np.ndarray
    :return: Expected spatial lags
    :rtype: np.ndarray
    """
    p = data.spec.p
    Z = data.R[:, :, p:]
    signal = Z @ np.asarray(theta, dtype=float)[p:] + np.asarray(alpha_star)[:, None]
    return np.stack([signal @ G.T for G in ops.G], axis=2)


def tsls_vcov(
    data: EstimationData, moments: MomentSet, sigma2: float, L: np.ndarray
) -> np.ndarray:
    """sigma^2 ((L,Z)'M_Q(L,Z)/N)^{-1} / N with M_Q = JQ(Q'JQ)^{-1}Q'J."""
    JQ = data.project(moments.Q)
    LZ = np.concatenate([L, data.R[:, :, data.spec.p:]], axis=2)
    qq = np.einsum("tnq,tnr->qr", JQ, JQ)
    qx = np.einsum("tnq,tnk->qk", JQ, LZ)
    bread = qx.T @ la.solve(qq, qx, assume_a="pos")
    return _symmetrize(sigma2 * _robust_inverse(bread))


def sandwich_vcov(D: np.ndarray, omega: OmegaHat, N: int) -> np.ndarray:
    """(D'D)^{-1} D'Omega D (D'D)^{-1} / N for identity weighting."""
    bread = _robust_inverse(D.T @ D)
    butter = D.T @ omega.matrix @ D
    return _symmetrize(bread @ butter @ bread / N)


def efficient_vcov(D: np.ndarray, omega: OmegaHat, N: int) -> np.ndarray:
    """(D'Omega^{-1}D)^{-1} / N for optimal weighting."""
    return _symmetrize(_robust_inverse(D.T @ omega.solve(D)) / N)


def _sym_sandwiched(data: EstimationData, P: Sequence[np.ndarray]) -> list:
    J = data.J
    return [J @ (Pl + Pl.T) @ J for Pl in P]


def d1_matrix(
    data: EstimationData,
    moments: MomentSet,
    sigma2: float,
    ops: Operators,
    L: np.ndarray,
) -> np.ndarray:
    """D_1 = -(1/N) [[sigma^2 C, 0], [Q'JL, Q'JZ]].

    C[l, r] = (T-1) tr(G_r' J P_l^s J).
    """
    p, m = data.spec.p, moments.m
    K = data.K
    D = np.zeros((moments.size, K))
    for l, Bs in enumerate(_sym_sandwiched(data, moments.P)):
        for r, G in enumerate(ops.G):
            D[l, r] = sigma2 * (data.T - 1) * np.sum(G * Bs)
    JQ = data.project(moments.Q)
    D[m:, :p] = np.einsum("tnq,tnr->qr", JQ, L)
    D[m:, p:] = np.einsum("tnq,tnk->qk", JQ, data.R[:, :, p:])
    return -D / data.N


def lag_kernel(data: EstimationData, ops: Operators) -> np.ndarray:
    """sum_{h=1}^{T-1} (T-h) A^{h-1} S^{-1}, powers truncated at the power tolerance."""
    T, n = data.T, data.n
    kernel = np.zeros((n, n))
    power = np.eye(n)
    for h in range(1, T):
        kernel += (T - h) * (power @ ops.S_inv)
        power = power @ ops.A
        if np.abs(power).sum(axis=1).max() < settings.power_tol:
            break
    return kernel


def d2_matrix(
    data: EstimationData,
    moments: MomentSet,
    sigma2: float,
    ops: Operators,
    theta: np.ndarray,
) -> np.ndarray:
    """Finite-T correction D_2 = -(1/T) [[b_rho, b_eta], [0, 0]].

    With kernel K = sum_h (T-h) A^{h-1} S^{-1} and B_l = J P_l^s J:
    b_l,gamma = sigma^2/N tr(K B_l), b_l,delta_j = sigma^2/N tr(K B_l M_j),
    b_l,rho_r = sigma^2/N tr(G_r (gamma I + sum delta M) K B_l); the beta
    columns are zero.
    """
    p, K_dim = data.spec.p, data.K
    theta = np.asarray(theta, dtype=float)
    gamma, delta = theta[p], theta[p + 1:2 * p + 1]
    W = data.weights
    kernel = lag_kernel(data, ops)
    lag_op = gamma * np.eye(data.n) + W.combine(delta)
    scale = sigma2 / data.N

    D = np.zeros((moments.size, K_dim))
    for l, Bs in enumerate(_sym_sandwiched(data, moments.P)):
        KB = kernel @ Bs
        for r, G in enumerate(ops.G):
            D[l, r] = scale * np.trace(G @ lag_op @ KB)
        D[l, p] = scale * np.trace(KB)
        for j, M in enumerate(W.mats):
            D[l, p + 1 + j] = scale * np.sum(KB * M.T)
    return -D / data.T


def best_precision(
    data: EstimationData,
    sigma2: float,
    ops: Operators,
    P_star: Sequence[np.ndarray],
    L: np.ndarray,
) -> np.ndarray:
    """Sigma* = [[C*/N, 0], [0, 0]] + (L,Z)'J(L,Z)/(N sigma^2).

    C*[l, r] = (T-1) tr(G_r' J P*_l^s J), symmetrized.
    """
    p, N = data.spec.p, data.N
    C = np.zeros((p, p))
    for l, Bs in enumerate(_sym_sandwiched(data, P_star)):
        for r, G in enumerate(ops.G):
            C[l, r] = (data.T - 1) * np.sum(G * Bs)
    LZ = np.concatenate([L, data.R[:, :, p:]], axis=2)
    JLZ = data.project(LZ)
    sigma = np.einsum("tnk,tnl->kl", JLZ, JLZ) / (N * sigma2)
    sigma[:p, :p] += _symmetrize(C) / N
    return _symmetrize(sigma)


def best_vcov(precision: np.ndarray, N: int) -> np.ndarray:
    """Sigma*^{-1} / N."""
    return _symmetrize(_robust_inverse(precision) / N)


__all__ = [
    "best_precision",
    "best_vcov",
    "d1_matrix",
    "d2_matrix",
    "efficient_vcov",
    "expected_spatial_lags",
    "lag_kernel",
    "sandwich_vcov",
    "tsls_vcov",
]
