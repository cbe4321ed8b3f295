"""Simulation of dynamic spatiotemporal ARCH panels.

Each period solves

    S(rho) Y*_t = gamma Y*_{t-1} + sum_l delta_l M_l Y*_{t-1} + X_t beta + mu + alpha_t 1 + eps*_t

with eps*_t = log eps_t^2, then sets h_t = exp(Y*_t - eps*_t) and
y_t = sign(eps_t) exp(Y*_t / 2). The recursion starts from Y* = 0 and the
state after ``burn_in`` periods is kept as Y*_0.

Random streams are split with ``np.random.SeedSequence``: unit effects,
burn-in draws and sample draws each get their own child stream, so changing
``burn_in`` leaves the post-burn-in draws untouched.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg as la

from src.config.settings import settings
from src.model.core import build_operators, warn_if_nonstationary
from src.models.base_models import DgpConfig
from src.models.panel import Panel
from src.spatial.weights import SpatialWeightSet, weights_from_recipe
from src.utils.errors import ConfigError, DataError, DivergenceError
from src.utils.logging import get_logger

logger = get_logger("dgp")

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


@dataclass(frozen=True, eq=False)
class SimulatedPanel:
    """A simulated panel together with its latent quantities.

    :param y: n x (T+1) outcomes, column 0 = Y_0
    :param x: n x T x k regressors
    :param h: n x T volatilities for t = 1..T
    :param ystar: n x (T+1) log-squared outcomes
    :param eps: n x T innovations for t = 1..T
    :param mu: Unit effects (length n)
    :param alpha: Time effects for t = 1..T
    """

    y: np.ndarray
    x: np.ndarray
    h: np.ndarray
    ystar: np.ndarray
    eps: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray

    @property
    def panel(self) -> Panel:
        """The observable part (y, x)."""
        return Panel(y=self.y, x=self.x)


def _generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def draw_errors(dist: str, n: int, seed: SeedLike, df: float = 3.0) -> np.ndarray:
    """Draw n i.i.d. innovations.

    Student-t draws are not rescaled, so t_3 innovations have variance 3.

    :param dist: ``gaussian`` or ``student_t``
    :type dist: str
    :param n: Number of draws
    :type n: int
    :param seed: Integer seed, SeedSequence or an existing Generator
    :type seed: SeedLike
    :param df: Degrees of freedom for ``student_t``
    :type df: float
    :return: Vector of length n
    :rtype: np.ndarray
    :raises ConfigError: On an unknown law or df <= 2
    """
    rng = _generator(seed)
    if dist == "gaussian":
        return rng.standard_normal(n)
    if dist == "student_t":
        if df <= 2:
            raise ConfigError(f"student_t needs df > 2, got {df}", field="df")
        return rng.standard_t(df, size=n)
    raise ConfigError(f"unknown error distribution {dist!r}", field="error_dist")


def _log_square(eps: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(eps ** 2)


def _guard(values: np.ndarray, period: int, limit: float) -> None:
    bad = ~np.isfinite(values) | (np.abs(values) > limit)
    if np.any(bad):
        unit = int(np.flatnonzero(bad)[0])
        raise DivergenceError(
            f"log-squared outcome diverged at unit {unit}, period {period} "
            f"(|Y*| > {limit:g})",
            unit=unit,
            period=period,
        )


def simulate(
    config: DgpConfig,
    weights: Optional[SpatialWeightSet] = None,
    errors: Optional[np.ndarray] = None,
) -> SimulatedPanel:
    """Simulate one panel from ``config``.

    :param config: Simulation configuration
    :type config: DgpConfig
    :param weights: Prebuilt weights; built from ``config.weights`` if omitted
    :type weights: Optional[SpatialWeightSet]
    :param errors: Optional n x T innovations for t = 1..T replacing the drawn ones
    :type errors: Optional[np.ndarray]
    :return: The simulated panel
    :rtype: SimulatedPanel
    :raises StationarityError: If S(rho) is singular
    :raises DivergenceError: If |Y*| exceeds the overflow limit
    """
    W = weights if weights is not None else weights_from_recipe(config.weights)
    spec, theta = config.spec, config.theta
    ops = build_operators(spec, theta, W)
    warn_if_nonstationary(spec, theta, W)

    n, T, k = W.n, config.T, spec.k
    limit = settings.overflow_limit
    lu = la.lu_factor(ops.S)
    lag_op = theta.gamma * np.eye(n) + W.combine(theta.delta)
    beta = np.asarray(theta.beta, dtype=float)

    effects_ss, burn_ss, sample_ss = np.random.SeedSequence(config.seed).spawn(3)
    mu = _generator(effects_ss).standard_normal(n) if spec.has_unit_effects else np.zeros(n)

    def step(prev: np.ndarray, x_t: np.ndarray, alpha_t: float, eps_star: np.ndarray) -> np.ndarray:
        rhs = lag_op @ prev + mu + alpha_t + eps_star
        if k:
            rhs = rhs + x_t @ beta
        return la.lu_solve(lu, rhs)

    # Burn-in from Y* = 0
    state = np.zeros(n)
    last_eps = np.ones(n)
    burn_rng = _generator(burn_ss)
    for b in range(config.burn_in):
        x_b = burn_rng.standard_normal((n, k))
        alpha_b = burn_rng.standard_normal() if spec.has_time_effects else 0.0
        last_eps = draw_errors(config.error_dist, n, burn_rng, config.df)
        state = step(state, x_b, alpha_b, _log_square(last_eps))
        _guard(state, period=b - config.burn_in, limit=limit)

    sample_rng = _generator(sample_ss)
    x = sample_rng.standard_normal((n, T, k))
    alpha = sample_rng.standard_normal(T) if spec.has_time_effects else np.zeros(T)
    if errors is None:
        eps = np.column_stack(
            [draw_errors(config.error_dist, n, sample_rng, config.df) for _ in range(T)]
        )
    else:
        eps = np.asarray(errors, dtype=float)
        if eps.shape != (n, T):
            raise DataError(f"errors must have shape {(n, T)}, got {eps.shape}", field="errors")

    ystar = np.empty((n, T + 1))
    ystar[:, 0] = state
    eps_star = _log_square(eps)
    for t in range(1, T + 1):
        ystar[:, t] = step(ystar[:, t - 1], x[:, t - 1, :], alpha[t - 1], eps_star[:, t - 1])
        _guard(ystar[:, t], period=t, limit=limit)

    h = np.exp(ystar[:, 1:] - eps_star)
    signs = np.column_stack([np.where(last_eps < 0, -1.0, 1.0), np.where(eps < 0, -1.0, 1.0)])
    y = signs * np.exp(ystar / 2.0)

    logger.debug(
        "Simulated panel",
        extra={"n": n, "T": T, "k": k, "burn_in": config.burn_in, "error_dist": config.error_dist},
    )
    return SimulatedPanel(y=y, x=x, h=h, ystar=ystar, eps=eps, mu=mu, alpha=alpha)


__all__ = ["SimulatedPanel", "draw_errors", "simulate"]
