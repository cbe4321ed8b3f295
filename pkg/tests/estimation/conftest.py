"""Shared fixtures for the estimation tests."""

import numpy as np
import pytest

from src.estimation.moments import prepare_data
from src.models.base_models import DgpConfig, ModelSpec, Theta, WeightsRecipe
from src.simulation.dgp import simulate
from src.spatial.weights import build_queen_contiguity

SIDE = 5
PERIODS = 10
TRUE_THETA = np.array([0.2, 0.2, -0.2, 0.5, 1.0])


@pytest.fixture
def spec():
    """Single-matrix spec with two regressors and time effects."""
    return ModelSpec(p=1, k=2, has_time_effects=True)


@pytest.fixture
def weights():
    """Row-normalized queen weights on a 5 x 5 lattice."""
    return build_queen_contiguity(SIDE)


@pytest.fixture
def dgp_config(spec):
    """Simulation config at the true parameters."""
    return DgpConfig(
        spec=spec,
        theta=Theta.from_vector(TRUE_THETA, spec),
        weights=WeightsRecipe(kind="queen", side=SIDE),
        T=PERIODS,
        burn_in=50,
        seed=2024,
    )


@pytest.fixture
def simulated(dgp_config, weights):
    """A noisy simulated panel."""
    return simulate(dgp_config, weights)


@pytest.fixture
def data(simulated, weights, spec):
    """Estimation data prepared from the noisy panel."""
    return prepare_data(simulated.panel, weights, spec)


@pytest.fixture
def exact_simulated(dgp_config, weights):
    """A panel whose sample innovations are all one, so eps* = 0."""
    return simulate(dgp_config, weights, errors=np.ones((SIDE * SIDE, PERIODS)))


@pytest.fixture
def exact_data(exact_simulated, weights, spec):
    """Estimation data prepared from the noiseless panel."""
    return prepare_data(exact_simulated.panel, weights, spec)


@pytest.fixture
def true_theta():
    """The simulated parameter vector (rho, gamma, delta, beta_0, beta_1)."""
    return TRUE_THETA.copy()
