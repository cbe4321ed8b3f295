"""Exception hierarchy shared by the simulation and estimation layers.

Every error carries an optional ``field`` naming the input, parameter or
file entry that triggered it, so that the CLI can report it precisely.
"""

from typing import Optional, Sequence

import numpy as np


class StarchError(Exception):
    """Base error for the toolkit.

    :param message: Error message describing the failure
    :type message: str
    :param field: Optional name of the offending input
    :type field: Optional[str]
    """

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class WeightsValidationError(StarchError):
    """Spatial weight matrices violate their structural invariants."""


class ConfigError(StarchError):
    """A JSON configuration does not match its schema."""


class DataError(StarchError):
    """Panel data is malformed or inconsistent with the weights.

    :param rows: Offending row numbers or (unit, time) pairs, if known
    :type rows: Optional[Sequence]
    """

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        rows: Optional[Sequence] = None,
    ):
        super().__init__(message, field)
        self.rows = list(rows) if rows is not None else []


class NumericalError(StarchError):
    """Base class for failures of the numerical pipeline."""


class StationarityError(NumericalError):
    """S(rho) is singular or too ill-conditioned to invert."""


class DivergenceError(NumericalError):
    """Simulated log-squared outcomes left the representable range."""

    def __init__(self, message: str, unit: int, period: int):
        super().__init__(message, field="ystar")
        self.unit = unit
        self.period = period


class UnderIdentificationError(NumericalError):
    """Too few usable instruments or a singular instrument cross-product."""


class WeightingError(NumericalError):
    """The GMM weighting matrix could not be built or inverted."""


class ConvergenceError(NumericalError):
    """The optimizer stopped without meeting its tolerances.

    :param theta: Best iterate reached
    :type theta: np.ndarray
    :param gradient_norm: Objective gradient norm at that iterate
    :type gradient_norm: float
    """

    def __init__(self, message: str, theta: np.ndarray, gradient_norm: float):
        super().__init__(message, field="theta")
        self.theta = np.asarray(theta, dtype=float)
        self.gradient_norm = float(gradient_norm)


__all__ = [
    "StarchError",
    "WeightsValidationError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "StationarityError",
    "DivergenceError",
    "UnderIdentificationError",
    "WeightingError",
    "ConvergenceError",
]
