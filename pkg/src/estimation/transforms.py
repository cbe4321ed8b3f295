"""Deterministic transformations of the panel.

The chain is: log-square the outcomes, remove unit effects with the forward
orthogonal deviation (Helmert) along time, and remove time effects with the
cross-sectional projection J_n = I - 11'/n. Time is always axis 1, so every
function accepts n x T matrices and n x T x k regressor blocks alike.
"""

from dataclasses import dataclass

import numpy as np

from src.models.panel import Panel
from src.utils.errors import DataError
from src.utils.logging import get_logger

logger = get_logger("transforms")

NEAR_ZERO = 1e-12


def log_square(y: np.ndarray) -> np.ndarray:
    """y* = log(y^2), elementwise.

    :param y: Outcome matrix
    :type y: np.ndarray
    :return: Log-squared outcomes, same shape
    :rtype: np.ndarray
    :raises DataError: If any outcome is exactly zero; ``rows`` lists (i, t)
    """
    y = np.asarray(y, dtype=float)
    zeros = np.argwhere(y == 0)
    if zeros.size:
        pairs = [tuple(int(v) for v in idx) for idx in zeros]
        raise DataError(
            f"{len(pairs)} outcome(s) are exactly zero, first at (unit, time) = {pairs[0]}",
            field="y",
            rows=pairs,
        )
    tiny = int(np.count_nonzero(np.abs(y) < NEAR_ZERO))
    if tiny:
        logger.warning("Near-zero outcomes make log(y^2) unstable", extra={"count": tiny})
    return np.log(y ** 2)


def helmert_constants(T: int) -> np.ndarray:
    """c_t = sqrt((T - t) / (T - t + 1)) for t = 1..T-1."""
    t = np.arange(1, T)
    return np.sqrt((T - t) / (T - t + 1.0))


def helmert(mat: np.ndarray) -> np.ndarray:
    """Forward orthogonal deviation along axis 1.

    Column t of the result is c_t (col_t - mean(col_{t+1..T})), t = 1..T-1.

    :param mat: Array with T >= 2 columns on axis 1
    :type mat: np.ndarray
    :return: Array with T-1 columns on axis 1
    :rtype: np.ndarray
    :raises DataError: If T < 2
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim < 2 or mat.shape[1] < 2:
        raise DataError("helmert needs at least two periods", field="T")
    T = mat.shape[1]
    tail = np.flip(np.cumsum(np.flip(mat, axis=1), axis=1), axis=1)
    counts = np.arange(T - 1, 0, -1, dtype=float)
    shape = (1, T - 1) + (1,) * (mat.ndim - 2)
    forward_mean = tail[:, 1:] / counts.reshape(shape)
    return helmert_constants(T).reshape(shape) * (mat[:, :-1] - forward_mean)


def helmert_lag(mat: np.ndarray) -> np.ndarray:
    """Transformed lag block Y**,-1_{t-1}, t = 1..T-1.

    ``mat`` holds Y*_0..Y*_{T-1}; the weights are those of ``helmert``
    applied to the shifted block.
    """
    return helmert(mat)


def demean_cross_section(mat: np.ndarray) -> np.ndarray:
    """Apply J_n = I - 11'/n along axis 0.

    :param mat: Array with n >= 2 rows
    :type mat: np.ndarray
    :return: Column-demeaned array
    :rtype: np.ndarray
    :raises DataError: If n < 2
    """
    mat = np.asarray(mat, dtype=float)
    if mat.shape[0] < 2:
        raise DataError("cross-sectional demeaning needs n >= 2", field="n")
    return mat - mat.mean(axis=0, keepdims=True)


def first_difference(mat: np.ndarray) -> np.ndarray:
    """col_{t+1} - col_t along axis 1."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim < 2 or mat.shape[1] < 2:
        raise DataError("first differences need at least two periods", field="T")
    return np.diff(mat, axis=1)


@dataclass(frozen=True, eq=False)
class TransformedPanel:
    """Helmert-transformed blocks of a panel.

    :param ystar: n x (T+1) log-squared outcomes Y*_0..Y*_T
    :param ystar2: n x (T-1) transformed outcomes Y**_t
    :param ylag2: n x (T-1) transformed lags Y**,-1_{t-1}
    :param xstar: n x (T-1) x k transformed regressors X*_t
    :param c: Scale constants c_t
    """

    ystar: np.ndarray
    ystar2: np.ndarray
    ylag2: np.ndarray
    xstar: np.ndarray
    c: np.ndarray


def transform_panel(panel: Panel) -> TransformedPanel:
    """Log-square and Helmert-transform a panel.

    :param panel: Observed panel with T >= 2
    :type panel: Panel
    :return: The transformed blocks
    :rtype: TransformedPanel
    """
    ystar = log_square(panel.y)
    return TransformedPanel(
        ystar=ystar,
        ystar2=helmert(ystar[:, 1:]),
        ylag2=helmert_lag(ystar[:, :-1]),
        xstar=helmert(panel.x),
        c=helmert_constants(panel.T),
    )


__all__ = [
    "TransformedPanel",
    "demean_cross_section",
    "first_difference",
    "helmert",
    "helmert_constants",
    "helmert_lag",
    "log_square",
    "transform_panel",
]
