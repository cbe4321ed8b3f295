"""Desk-scale Monte Carlo acceptance runs.

Run with ``pytest -m slow``. The rho bands follow the efficiency bound of
the best moments on these designs: the quadratic moments carry most of the
information about rho, so its MAE sits near 0.037 at n=64, T=20.
"""

import os

import numpy as np
import pytest

from src.montecarlo.experiment import run_experiment
from src.montecarlo.presets import preset_config

pytestmark = pytest.mark.slow

SEED = 20240521
WORKERS = min(4, os.cpu_count() or 1)


def _run(preset, **overrides):
    config = preset_config(preset, SEED, **{"replications": 200, "stage": "best", **overrides})
    result = run_experiment(config, workers=WORKERS)
    assert not result.unreliable
    return result


@pytest.fixture(scope="module")
def m1_small():
    """M1, gaussian, n=64, T=20, best stage."""
    return _run("table-a1-gaussian-small")


@pytest.fixture(scope="module")
def m1_large():
    """M1, gaussian, n=100, T=40, best stage."""
    return _run("table-a1-gaussian-large")


class TestM1Reproduction:
    """Tests for bias and MAE on the M1 design."""

    def test_small_panel(self, m1_small):
        """When n=64 and T=20, rho is nearly unbiased and MAE(gamma) lies in 0.018-0.036."""
        labels = list(m1_small.labels)
        rho, gamma = labels.index("rho"), labels.index("gamma")

        assert abs(m1_small.bias[rho]) < 0.02
        assert 0.025 <= m1_small.mae[rho] <= 0.06
        assert 0.018 <= m1_small.mae[gamma] <= 0.036

    def test_larger_panel_is_more_precise(self, m1_small, m1_large):
        """When n and T grow, every MAE falls."""
        rho = list(m1_large.labels).index("rho")

        assert np.all(m1_large.mae < m1_small.mae)
        assert 0.012 <= m1_large.mae[rho] <= 0.035

    def test_heavy_tails_change_little(self, m1_small):
        """When errors are t3, each MAE stays within 30% of the gaussian one."""
        heavy = _run("table-a1-t3-small")

        np.testing.assert_array_less(np.abs(heavy.mae - m1_small.mae), 0.3 * m1_small.mae)


class TestM3Reproduction:
    """Tests for bias and MAE on the two-matrix design."""

    def test_small_panel(self):
        """When n=49 and T=20, every bias is below 0.03 and MAE(gamma) lies in 0.018-0.036."""
        result = _run("table-a3-gaussian-small")
        gamma = list(result.labels).index("gamma")

        assert len(result.labels) == 7
        np.testing.assert_array_less(np.abs(result.bias), 0.03)
        assert 0.018 <= result.mae[gamma] <= 0.036


class TestCoverage:
    """Tests for interval coverage from the large-T covariance."""

    def test_nominal_intervals(self):
        """When 500 M1 panels are fitted, 95% intervals cover each parameter 90-99% of the time."""
        result = _run(
            "table-a1-gaussian-large", replications=500, stage="optimal", vcov_form="large_t"
        )
        coverage = result.coverage(0.95)

        assert np.all(coverage >= 0.90)
        assert np.all(coverage <= 0.99)
