"""Shared Pydantic models for the spatiotemporal ARCH toolkit.

This module contains the value types passed between the simulation,
estimation and Monte Carlo layers and read from JSON configuration files.

The models provide type safety and validation for:
- Model structure (spatial order, regressors, fixed effects)
- Parameter vectors and their canonical ordering
- Weight-matrix construction recipes
- Simulation and experiment configurations
"""

from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ErrorDist = Literal["gaussian", "student_t"]
Stage = Literal["2sls", "initial", "optimal", "best"]
VcovForm = Literal["auto", "large_t", "finite_t"]


class ModelSpec(BaseModel):
    """Structure of the log-volatility equation.

    :param p: Number of spatial weight matrices (spatial-lag order)
    :type p: int
    :param k: Number of exogenous regressors
    :type k: int
    :param has_time_effects: Whether per-period effects alpha_t are present
    :type has_time_effects: bool
    :param has_unit_effects: Whether per-unit effects mu_i are present
    :type has_unit_effects: bool
    """
    model_config = ConfigDict(frozen=True)

    p: int = Field(1, ge=1)
    k: int = Field(0, ge=0)
    has_time_effects: bool = True
    has_unit_effects: bool = True

    @property
    def k_z(self) -> int:
        """Width of the transformed regressor block Z (lag, spatial lags, X)."""
        return 1 + self.p + self.k

    @property
    def n_params(self) -> int:
        """Length of theta = (rho', gamma, delta', beta')'."""
        return self.p + self.k_z

    def param_labels(self) -> List[str]:
        """Labels in theta order, e.g. ``rho, gamma, delta, beta_0, beta_1``."""
        def indexed(name: str) -> List[str]:
            if self.p == 1:
                return [name]
            return [f"{name}_{i + 1}" for i in range(self.p)]

        return (
            indexed("rho")
            + ["gamma"]
            + indexed("delta")
            + [f"beta_{j}" for j in range(self.k)]
        )


class Theta(BaseModel):
    """Parameter vector theta = (rho', gamma, delta', beta')'.

    ``eta`` = (gamma, delta', beta')' is the coefficient stack of the
    transformed regressors; the ordering is fixed here for every vector and
    covariance matrix downstream.

    :param rho: Contemporaneous spatial ARCH coefficients (length p)
    :type rho: List[float]
    :param gamma: Temporal ARCH coefficient
    :type gamma: float
    :param delta: Spatiotemporal ARCH coefficients (length p)
    :type delta: List[float]
    :param beta: Regressor coefficients (length k)
    :type beta: List[float]
    """
    model_config = ConfigDict(frozen=True)

    rho: List[float]
    gamma: float
    delta: List[float]
    beta: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_shapes(self) -> "Theta":
        if len(self.rho) < 1:
            raise ValueError("rho must hold at least one coefficient")
        if len(self.rho) != len(self.delta):
            raise ValueError(
                f"rho and delta must have equal length, got {len(self.rho)} and {len(self.delta)}"
            )
        if not np.all(np.isfinite(self.to_vector())):
            raise ValueError("theta must be finite")
        return self

    @property
    def p(self) -> int:
        return len(self.rho)

    @property
    def k(self) -> int:
        return len(self.beta)

    @property
    def eta(self) -> np.ndarray:
        return np.concatenate([[self.gamma], self.delta, self.beta]).astype(float)

    def to_vector(self) -> np.ndarray:
        """Stack into the canonical theta ordering.

        :return: Array (rho, gamma, delta, beta)
        :rtype: np.ndarray
        """
        return np.concatenate(
            [self.rho, [self.gamma], self.delta, self.beta]
        ).astype(float)

    @classmethod
    def from_vector(cls, vector, spec: ModelSpec) -> "Theta":
        """Split a canonical theta vector according to ``spec``.

        :param vector: Array of length spec.n_params
        :type vector: array-like
        :param spec: Model structure giving p and k
        :type spec: ModelSpec
        :return: The parameter object
        :rtype: Theta
        :raises ValueError: If the length does not match the spec
        """
        v = np.asarray(vector, dtype=float).ravel()
        if v.size != spec.n_params:
            raise ValueError(f"theta has length {v.size}, expected {spec.n_params}")
        p = spec.p
        return cls(
            rho=v[:p].tolist(),
            gamma=float(v[p]),
            delta=v[p + 1:2 * p + 1].tolist(),
            beta=v[2 * p + 1:].tolist(),
        )

    @classmethod
    def zeros(cls, spec: ModelSpec) -> "Theta":
        return cls.from_vector(np.zeros(spec.n_params), spec)

    def matches(self, spec: ModelSpec) -> bool:
        return self.p == spec.p and self.k == spec.k


class WeightsRecipe(BaseModel):
    """How to obtain the spatial weight matrices.

    :param kind: ``queen`` (p=1), ``second_order`` (p=2) or ``file``
    :type kind: str
    :param side: Lattice side for the lattice builders
    :type side: Optional[int]
    :param path: Triplet weight file for ``file``
    :type path: Optional[Path]
    """
    kind: Literal["queen", "second_order", "file"] = "queen"
    side: Optional[int] = Field(None, ge=2)
    path: Optional[Path] = None

    @model_validator(mode="after")
    def validate_source(self) -> "WeightsRecipe":
        if self.kind == "file" and self.path is None:
            raise ValueError("path is required when kind is 'file'")
        if self.kind != "file" and self.side is None:
            raise ValueError(f"side is required when kind is '{self.kind}'")
        return self


class DgpConfig(BaseModel):
    """Simulation configuration for one panel.

    Unit effects, time effects and regressors are i.i.d. standard normal.

    :param spec: Model structure
    :type spec: ModelSpec
    :param theta: True parameters
    :type theta: Theta
    :param weights: Weight-matrix recipe
    :type weights: WeightsRecipe
    :param T: Number of periods after Y_0
    :type T: int
    :param burn_in: Periods iterated from Y* = 0 before Y*_0
    :type burn_in: int
    :param error_dist: Law of epsilon
    :type error_dist: str
    :param df: Degrees of freedom for ``student_t``
    :type df: float
    :param seed: Master seed
    :type seed: int
    """
    spec: ModelSpec
    theta: Theta
    weights: WeightsRecipe
    T: int = Field(..., ge=2)
    burn_in: int = Field(200, ge=0)
    error_dist: ErrorDist = "gaussian"
    df: float = 3.0
    seed: int = Field(..., ge=0)

    @field_validator("df")
    @classmethod
    def validate_df(cls, v: float) -> float:
        if v <= 2:
            raise ValueError(f"df must exceed 2, got {v}")
        return v

    @model_validator(mode="after")
    def validate_theta(self) -> "DgpConfig":
        if not self.theta.matches(self.spec):
            raise ValueError(
                f"theta has p={self.theta.p}, k={self.theta.k}; spec expects "
                f"p={self.spec.p}, k={self.spec.k}"
            )
        return self


class ExperimentConfig(BaseModel):
    """Monte Carlo experiment definition.

    Preset designs pin ``spec``, ``theta`` and ``weights``; a ``custom``
    design must supply all three.

    :param design: Preset name or ``custom``
    :type design: str
    :param side: Lattice side, n = side**2
    :type side: int
    :param T: Number of periods
    :type T: int
    :param error_dist: Law of epsilon
    :type error_dist: str
    :param replications: Number of replications
    :type replications: int
    :param stage: Estimator stage evaluated in each replication
    :type stage: str
    :param seed: Master seed
    :type seed: int
    :param workers: Worker processes
    :type workers: int
    """
    design: Literal["M1", "M2", "M3", "custom"] = "M1"
    side: int = Field(8, ge=2)
    T: int = Field(20, ge=3)
    error_dist: ErrorDist = "gaussian"
    df: float = 3.0
    replications: int = Field(200, ge=1)
    stage: Stage = "best"
    vcov_form: VcovForm = "auto"
    burn_in: int = Field(200, ge=0)
    seed: int = Field(..., ge=0)
    workers: int = Field(1, ge=1)
    spec: Optional[ModelSpec] = None
    theta: Optional[Theta] = None
    weights: Optional[WeightsRecipe] = None

    @model_validator(mode="after")
    def validate_custom(self) -> "ExperimentConfig":
        if self.design == "custom":
            missing = [
                name for name in ("spec", "theta", "weights")
                if getattr(self, name) is None
            ]
            if missing:
                raise ValueError(f"custom design requires {', '.join(missing)}")
            if not self.theta.matches(self.spec):
                raise ValueError("theta does not match spec")
        return self
