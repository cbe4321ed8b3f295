"""Reduced-form operators and validity checks."""

from .core import (
    Operators,
    StationarityReport,
    build_operators,
    check_stationarity,
    warn_if_nonstationary,
)

__all__ = [
    "Operators",
    "StationarityReport",
    "build_operators",
    "check_stationarity",
    "warn_if_nonstationary",
]
