"""Levenberg-Marquardt minimization of GMM objectives.

The objective (g/N)'W(g/N) is rewritten as a sum of squares |C^{-1} g / N|^2
with W = (C C')^{-1}, and handed to ``scipy.optimize.least_squares`` with the
analytic moment Jacobian. Several starting points are tried and the lowest
converged objective wins.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from src.config.settings import settings
from src.estimation.moments import MomentFunction
from src.utils.errors import ConvergenceError
from src.utils.logging import get_logger

logger = get_logger("optimizer")

Whitener = Callable[[np.ndarray], np.ndarray]


def _identity(arr: np.ndarray) -> np.ndarray:
    return arr


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Outcome of a multistart minimization.

    :param theta: Minimizer
    :param objective: (g/N)'W(g/N) at the minimizer
    :param gradient_norm: Euclidean norm of the objective gradient
    :param nfev: Function evaluations of the winning run
    :param status: Solver status code of the winning run
    :param start_index: Which starting point won
    """

    theta: np.ndarray
    objective: float
    gradient_norm: float
    nfev: int
    status: int
    start_index: int


class GmmObjective:
    """Weighted GMM objective in residual-stacked form.

    :param moment_fn: Compiled moment function
    :type moment_fn: MomentFunction
    :param whiten: Map g -> C^{-1} g; identity for the unweighted objective
    :type whiten: Optional[Whitener]
    """

    def __init__(self, moment_fn: MomentFunction, whiten: Optional[Whitener] = None):
        self.moment_fn = moment_fn
        self.whiten = whiten or _identity
        self.scale = 1.0 / moment_fn.data.N

    def residual(self, theta: np.ndarray) -> np.ndarray:
        return self.whiten(self.moment_fn.value(theta) * self.scale)

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        return self.whiten(self.moment_fn.jacobian(theta) * self.scale)

    def __call__(self, theta: np.ndarray) -> float:
        r = self.residual(theta)
        return float(r @ r)

    def gradient_norm(self, theta: np.ndarray) -> float:
        r = self.residual(theta)
        return float(np.linalg.norm(2.0 * self.jacobian(theta).T @ r))


def minimize(
    objective: GmmObjective,
    starts: Sequence[np.ndarray],
    max_nfev: Optional[int] = None,
    gtol: Optional[float] = None,
    xtol: Optional[float] = None,
) -> OptimizationResult:
    """Run Levenberg-Marquardt from each start and keep the best converged run.

    :param objective: Objective in residual-stacked form
    :type objective: GmmObjective
    :param starts: Starting points
    :type starts: Sequence[np.ndarray]
    :param max_nfev: Iteration cap (settings default 500)
    :type max_nfev: Optional[int]
    :param gtol: Gradient tolerance (settings default 1e-8)
    :type gtol: Optional[float]
    :param xtol: Step tolerance (settings default 1e-10)
    :type xtol: Optional[float]
    :return: The best converged run
    :rtype: OptimizationResult
    :raises ConvergenceError: If no start converges; carries the best iterate
    """
    options = settings.optimizer_options
    max_nfev = max_nfev or options["max_nfev"]
    gtol = gtol or options["gtol"]
    xtol = xtol or options["xtol"]

    best, best_failed = None, None
    for index, start in enumerate(starts):
        x0 = np.asarray(start, dtype=float)
        try:
            res = least_squares(
                objective.residual,
                x0,
                jac=objective.jacobian,
                method="lm",
                xtol=xtol,
                gtol=gtol,
                ftol=1e-15,
                max_nfev=max_nfev,
            )
        except (ValueError, np.linalg.LinAlgError) as exc:
            logger.warning("Optimizer start failed", extra={"start": index, "error": str(exc)})
            continue

        value = float(2.0 * res.cost)
        if not np.isfinite(value):
            continue
        candidate = OptimizationResult(
            theta=res.x,
            objective=value,
            gradient_norm=objective.gradient_norm(res.x),
            nfev=int(res.nfev),
            status=int(res.status),
            start_index=index,
        )
        logger.debug(
            "Optimizer run finished",
            extra={"start": index, "objective": value, "status": res.status, "nfev": res.nfev},
        )
        if res.status > 0:
            if best is None or candidate.objective < best.objective:
                best = candidate
        elif best_failed is None or candidate.objective < best_failed.objective:
            best_failed = candidate

    if best is None:
        if best_failed is None:
            raise ConvergenceError(
                "optimizer failed from every starting point",
                theta=np.asarray(starts[0], dtype=float),
                gradient_norm=float("nan"),
            )
        raise ConvergenceError(
            f"optimizer hit the {max_nfev}-evaluation cap without converging",
            theta=best_failed.theta,
            gradient_norm=best_failed.gradient_norm,
        )
    return best


__all__ = ["GmmObjective", "OptimizationResult", "minimize"]
