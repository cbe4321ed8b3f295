"""Observed panel container shared by simulation, estimation and the CLI."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.utils.errors import DataError


@dataclass(frozen=True, eq=False)
class Panel:
    """Outcomes and regressors of a balanced panel.

    :param y: n x (T+1) outcomes, column 0 holds Y_0
    :param x: n x T x k exogenous regressors for t = 1..T
    :param unit_ids: Optional labels of the n units, in row order
    :param time_ids: Optional labels of the T+1 periods, in column order
    :param regressor_names: Optional names of the k regressors
    """

    y: np.ndarray
    x: np.ndarray
    unit_ids: Optional[Sequence] = None
    time_ids: Optional[Sequence] = None
    regressor_names: Optional[Sequence[str]] = None

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 2:
            raise DataError(f"y must be n x (T+1), got shape {y.shape}", field="y")
        if x.ndim == 2 and x.size == 0:
            x = x.reshape(y.shape[0], y.shape[1] - 1, 0)
        if x.ndim != 3 or x.shape[:2] != (y.shape[0], y.shape[1] - 1):
            raise DataError(
                f"x must be n x T x k with n={y.shape[0]}, T={y.shape[1] - 1}; got {x.shape}",
                field="x",
            )
        if not np.all(np.isfinite(y)):
            raise DataError("y has non-finite entries", field="y")
        if not np.all(np.isfinite(x)):
            raise DataError("x has non-finite entries", field="x")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1] - 1

    @property
    def k(self) -> int:
        return self.x.shape[2]

    @property
    def names(self) -> list:
        if self.regressor_names is not None:
            return list(self.regressor_names)
        return [f"x{j + 1}" for j in range(self.k)]
