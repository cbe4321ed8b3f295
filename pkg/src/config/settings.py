"""Configuration settings for the spatiotemporal ARCH toolkit.

This module defines the runtime configuration for simulation, estimation and
Monte Carlo runs: numerical tolerances, optimizer limits, replication counts
and logging. Settings are loaded from environment variables prefixed with
``STARCH_`` and from ``.env`` files.
"""

from pathlib import Path
from typing import Literal, Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables.

    Every numerical threshold used by the estimation pipeline lives here so
    that a run can be reproduced from its environment alone.

    :param log_level: Logging level for the application
    :type log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
    :param log_format: Log line format ("structured" or "simple")
    :type log_format: Literal["structured", "simple"]
    :param log_file: Optional file receiving a copy of the log stream
    :type log_file: Optional[Path]
    :param seed: Default master seed for simulation and Monte Carlo runs
    :type seed: int
    :param burn_in: Periods discarded before Y*_0 when simulating
    :type burn_in: int
    :param replications: Desk-scale Monte Carlo replication count
    :type replications: int
    :param full_replications: Replication count used with ``--full``
    :type full_replications: int
    :param workers: Worker processes for Monte Carlo runs
    :type workers: int
    :param optimizer_max_nfev: Iteration cap of the least-squares solver
    :type optimizer_max_nfev: int
    :param optimizer_gtol: Gradient-norm convergence tolerance
    :type optimizer_gtol: float
    :param optimizer_xtol: Step-size convergence tolerance
    :type optimizer_xtol: float
    :param finite_t_threshold: Finite-T covariance is used when T-1 is below this
    :type finite_t_threshold: int
    """

    model_config = SettingsConfigDict(
        env_prefix="STARCH_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",  # Ignore extra fields in .env file
    )

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = (
        Field("INFO", description="Logging level")
    )
    log_format: Literal["structured", "simple"] = Field(
        "structured", description="Log line format"
    )
    log_file: Optional[Path] = Field(None, description="Optional log file path")

    # Simulation
    seed: int = Field(20240601, description="Default master seed")
    burn_in: int = Field(200, description="Burn-in periods before Y*_0")
    overflow_limit: float = Field(
        700.0, description="Largest |Y*| accepted before exp() overflows"
    )

    # Monte Carlo
    replications: int = Field(200, description="Desk-scale replication count")
    full_replications: int = Field(1000, description="Full-run replication count")
    workers: int = Field(1, description="Worker processes for replications")
    failure_tolerance: float = Field(
        0.05, description="Failed-replication share above which a run is unreliable"
    )

    # Numerics
    s_rcond: float = Field(
        1e-10, description="Reciprocal condition below which S(rho) is singular"
    )
    power_tol: float = Field(
        1e-12, description="Truncation threshold for powers of A in H_t"
    )
    iv_variance_floor: float = Field(
        1e-12, description="IV columns with smaller variance after J are dropped"
    )
    omega_rcond: float = Field(
        1e-12, description="Reciprocal condition of Omega triggering the ridge"
    )
    omega_ridge: float = Field(
        1e-8, description="Ridge multiple of mean(diag(Omega))"
    )
    identification_threshold: float = Field(
        1e8, description="Condition number flagged by the identification check"
    )
    kurtosis_floor: float = Field(
        1.0 + 1e-6, description="Lower clamp for eta4 = mu4 / sigma^4"
    )
    exact_fit_sigma2: float = Field(
        1e-14, description="sigma^2 at or below this is treated as an exact fit"
    )

    # Optimizer
    optimizer_max_nfev: int = Field(500, description="Iteration cap")
    optimizer_gtol: float = Field(1e-8, description="Gradient tolerance")
    optimizer_xtol: float = Field(1e-10, description="Step tolerance")
    finite_t_threshold: int = Field(
        50, description="Use the finite-T covariance when T-1 is below this"
    )

    # Diagnostics
    moran_permutations: int = Field(999, description="Moran's I permutations")
    acf_lags: int = Field(5, description="Ljung-Box lags per location")
    significance: float = Field(0.05, description="Diagnostic test level")

    @field_validator(
        "burn_in", "replications", "full_replications", "workers",
        "optimizer_max_nfev", "moran_permutations", "acf_lags",
    )
    @classmethod
    def validate_counts(cls, v: int, info) -> int:
        """Reject negative counts and zero where a count must be positive.

        :param v: The configured count
        :type v: int
        :param info: Validation info naming the field
        :type info: Any
        :return: The validated count
        :rtype: int
        :raises ValueError: If the count is out of range
        """
        minimum = 0 if info.field_name == "burn_in" else 1
        if v < minimum:
            raise ValueError(f"{info.field_name} must be >= {minimum}, got {v}")
        return v

    @field_validator("failure_tolerance", "significance")
    @classmethod
    def validate_fraction(cls, v: float, info) -> float:
        """Ensure probability-like settings lie strictly inside (0, 1).

        :param v: The configured fraction
        :type v: float
        :param info: Validation info naming the field
        :type info: Any
        :return: The validated fraction
        :rtype: float
        :raises ValueError: If the fraction is outside (0, 1)
        """
        if not 0.0 < v < 1.0:
            raise ValueError(f"{info.field_name} must lie in (0, 1), got {v}")
        return v

    @property
    def optimizer_options(self) -> dict:
        """Keyword arguments forwarded to the least-squares solver.

        :return: Tolerance and iteration settings
        :rtype: dict
        """
        return {
            "max_nfev": self.optimizer_max_nfev,
            "gtol": self.optimizer_gtol,
            "xtol": self.optimizer_xtol,
        }


"""Global settings instance.

This instance is created once and used throughout the application
to access configuration settings.
"""
settings = Settings()
