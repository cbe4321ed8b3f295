"""Monte Carlo replication engine.

Replication r draws its panel from ``SeedSequence(seed, spawn_key=(r,))``, so
results depend only on the master seed and never on the worker count.
Replications run sequentially or on a ``ProcessPoolExecutor``; outcomes are
collected in replication order before aggregation.
"""

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from src.config.settings import settings
from src.estimation.estimators import fit_stage
from src.estimation.moments import prepare_data
from src.models.base_models import DgpConfig, ExperimentConfig
from src.montecarlo.presets import design_components
from src.simulation.dgp import simulate
from src.spatial.weights import weights_from_recipe
from src.utils.errors import DataError, NumericalError
from src.utils.logging import get_logger

logger = get_logger("montecarlo")


@dataclass(frozen=True)
class ReplicationOutcome:
    """Estimates of one replication, or the reason it failed."""

    index: int
    estimate: Optional[np.ndarray] = None
    se: Optional[np.ndarray] = None
    failure: Optional[str] = None


def replication_seed(seed: int, index: int) -> int:
    """Integer seed of replication ``index`` derived from the master seed."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def _run_replication(payload: Tuple[Dict[str, Any], int]) -> ReplicationOutcome:
    config_data, index = payload
    config = ExperimentConfig.model_validate(config_data)
    spec, theta, recipe = design_components(config)
    weights = weights_from_recipe(recipe)
    dgp = DgpConfig(
        spec=spec,
        theta=theta,
        weights=recipe,
        T=config.T,
        burn_in=config.burn_in,
        error_dist=config.error_dist,
        df=config.df,
        seed=replication_seed(config.seed, index),
    )
    try:
        sim = simulate(dgp, weights)
        data = prepare_data(sim.panel, weights, spec)
        fit = fit_stage(data, config.stage, config.vcov_form)
    except (NumericalError, DataError) as exc:
        logger.debug("Replication failed", extra={"index": index, "error": str(exc)})
        return ReplicationOutcome(index=index, failure=type(exc).__name__)
    return ReplicationOutcome(index=index, estimate=fit.vector, se=fit.se)


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Per-replication estimates and their aggregates.

    :param config: The experiment configuration
    :param labels: Parameter names
    :param theta0: True parameter vector
    :param n: Cross-section size
    :param estimates: replications x K estimates, NaN rows for failures
    :param se: Matching standard errors
    :param failures: Failure reasons histogram
    :param wall_clock: Seconds spent
    """

    config: ExperimentConfig
    labels: Tuple[str, ...]
    theta0: np.ndarray
    n: int
    estimates: np.ndarray
    se: np.ndarray
    failures: Dict[str, int] = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def T(self) -> int:
        return self.config.T

    @property
    def replications(self) -> int:
        return self.estimates.shape[0]

    @property
    def ok(self) -> np.ndarray:
        return np.all(np.isfinite(self.estimates), axis=1)

    @property
    def successes(self) -> int:
        return int(self.ok.sum())

    @property
    def failure_count(self) -> int:
        return self.replications - self.successes

    @property
    def unreliable(self) -> bool:
        return self.failure_count > settings.failure_tolerance * self.replications

    @property
    def errors(self) -> np.ndarray:
        return self.estimates[self.ok] - self.theta0

    @property
    def bias(self) -> np.ndarray:
        if not self.successes:
            return np.full(self.theta0.size, np.nan)
        return self.errors.mean(axis=0)

    @property
    def mae(self) -> np.ndarray:
        if not self.successes:
            return np.full(self.theta0.size, np.nan)
        return np.abs(self.errors).mean(axis=0)

    @property
    def mae_se(self) -> np.ndarray:
        """Monte Carlo standard error of the MAE, std|error| / sqrt(R)."""
        if self.successes < 2:
            return np.full(self.theta0.size, np.nan)
        return np.abs(self.errors).std(axis=0, ddof=1) / np.sqrt(self.successes)

    def coverage(self, level: float = 0.95) -> np.ndarray:
        """Share of replications whose normal interval covers theta0."""
        if not self.successes:
            return np.full(self.theta0.size, np.nan)
        z = stats.norm.ppf(0.5 + level / 2.0)
        return (np.abs(self.errors) <= z * self.se[self.ok]).mean(axis=0)

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "true": self.theta0,
                "bias": self.bias,
                "mae": self.mae,
                "mae_se": self.mae_se,
                "coverage": self.coverage(),
            },
            index=pd.Index(self.labels, name="parameter"),
        )

    def estimates_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.estimates, columns=list(self.labels))
        frame.insert(0, "replication", np.arange(self.replications))
        return frame


def _outcomes(config: ExperimentConfig, workers: int) -> List[ReplicationOutcome]:
    payload = config.model_dump(mode="json")
    jobs = [(payload, r) for r in range(config.replications)]
    if workers <= 1:
        return [_run_replication(job) for job in jobs]
    chunksize = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        outcomes = list(executor.map(_run_replication, jobs, chunksize=chunksize))
    return sorted(outcomes, key=lambda o: o.index)


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    """Run every replication of ``config`` and aggregate.

    :param config: Experiment configuration
    :type config: ExperimentConfig
    :param workers: Worker processes; ``config.workers`` if omitted
    :type workers: Optional[int]
    :return: Estimates, aggregates and failure histogram
    :rtype: ExperimentResult
    """
    workers = workers or config.workers
    spec, theta, _ = design_components(config)
    K = spec.n_params
    logger.info(
        "Starting experiment",
        extra={
            "design": config.design,
            "replications": config.replications,
            "stage": config.stage,
            "workers": workers,
        },
    )
    started = time.perf_counter()
    outcomes = _outcomes(config, workers)

    estimates = np.full((config.replications, K), np.nan)
    se = np.full((config.replications, K), np.nan)
    reasons: Counter = Counter()
    for outcome in outcomes:
        if outcome.failure is not None:
            reasons[outcome.failure] += 1
            continue
        estimates[outcome.index] = outcome.estimate
        se[outcome.index] = outcome.se

    result = ExperimentResult(
        config=config,
        labels=tuple(spec.param_labels()),
        theta0=theta.to_vector(),
        n=config.side ** 2 if config.design != "custom" else weights_from_recipe(config.weights).n,
        estimates=estimates,
        se=se,
        failures=dict(reasons),
        wall_clock=time.perf_counter() - started,
    )
    if result.unreliable:
        logger.warning(
            "Experiment unreliable: too many failed replications",
            extra={"failed": result.failure_count, "reasons": result.failures},
        )
    logger.info(
        "Experiment finished",
        extra={"successes": result.successes, "seconds": round(result.wall_clock, 3)},
    )
    return result


__all__ = ["ExperimentResult", "ReplicationOutcome", "replication_seed", "run_experiment"]
