"""Tests for residual, descriptive and volatility diagnostics."""

import numpy as np
import pytest

from src.estimation.diagnostics import (
    attach_diagnostics,
    diagnose_residuals,
    estimate_volatility,
    moran_matrix,
    moran_permutation_test,
    morans_i,
    panel_descriptives,
    residual_diagnostics,
)
from src.estimation.estimators import fit_2sls
from src.spatial.weights import SpatialWeightSet, build_queen_contiguity


@pytest.fixture
def ring_weights():
    """Row-normalized ring of six units."""
    n = 6
    mat = np.zeros((n, n))
    for i in range(n):
        mat[i, (i + 1) % n] = 0.5
        mat[i, (i - 1) % n] = 0.5
    return mat


@pytest.fixture
def lattice():
    """Queen weights on a 10 x 10 lattice."""
    return build_queen_contiguity(10)


class TestMoransI:
    """Tests for morans_i function."""

    def test_alternating_ring(self, ring_weights):
        """When values alternate around an even ring, returns -1."""
        u = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])

        assert morans_i(u, ring_weights) == pytest.approx(-1.0)

    def test_shared_level_is_maximal(self, lattice):
        """When residuals share one level plus tiny noise, returns about 1."""
        u = 5.0 + 1e-6 * np.random.default_rng(12).standard_normal(100)

        assert morans_i(u, lattice.mats[0]) == pytest.approx(1.0, abs=1e-6)

    def test_level_enters_without_demeaning(self, ring_weights):
        """When a constant is added, the raw statistic moves and the demeaned one does not."""
        u = np.array([3.0, 1.0, 4.0, 1.0, 5.0, 9.0])

        assert morans_i(u + 10.0, ring_weights) != pytest.approx(morans_i(u, ring_weights))
        assert morans_i(u + 10.0, ring_weights, demean=True) == pytest.approx(
            morans_i(u, ring_weights, demean=True)
        )

    def test_constant_vector(self, ring_weights):
        """When the vector is constant, returns 1, or NaN once demeaned."""
        assert morans_i(np.ones(6), ring_weights) == pytest.approx(1.0)
        assert np.isnan(morans_i(np.ones(6), ring_weights, demean=True))

    def test_zero_vector(self, ring_weights):
        """When the vector is zero, returns NaN."""
        assert np.isnan(morans_i(np.zeros(6), ring_weights))


class TestMoranPermutationTest:
    """Tests for moran_permutation_test function."""

    def test_smooth_surface_is_significant(self, lattice):
        """When residuals follow a spatial gradient, the p-value is below 0.01."""
        rows = np.arange(100) // 10 - 4.5
        u = rows + 0.1 * np.random.default_rng(0).standard_normal(100)

        stat, pvalue = moran_permutation_test(u, lattice.mats[0], 999, np.random.default_rng(1))

        assert stat > 0.5
        assert pvalue < 0.01

    def test_shared_level_at_permutation_maximum(self, lattice):
        """When residuals share one level plus tiny noise, no permutation exceeds it materially."""
        W = lattice.mats[0]
        u = 5.0 + 1e-6 * np.random.default_rng(12).standard_normal(100)
        rng = np.random.default_rng(4)
        permuted = [morans_i(rng.permutation(u), W) for _ in range(99)]

        stat, _ = moran_permutation_test(u, W, 99, np.random.default_rng(4))

        assert stat == pytest.approx(1.0, abs=1e-6)
        assert stat >= max(permuted) - 1e-6

    def test_pvalue_floor(self, lattice):
        """When no permutation reaches the observed value, p = 1/(R+1)."""
        u = np.arange(100) // 10 - 4.5

        _, pvalue = moran_permutation_test(u, lattice.mats[0], 99, np.random.default_rng(2))

        assert pvalue == pytest.approx(1 / 100)

    def test_deterministic_for_seed(self, lattice):
        """When the generator seed repeats, the p-value repeats."""
        u = np.random.default_rng(3).standard_normal(100)
        first = moran_permutation_test(u, lattice.mats[0], 199, np.random.default_rng(9))
        second = moran_permutation_test(u, lattice.mats[0], 199, np.random.default_rng(9))

        assert first == second

    def test_constant_vector_demeaned(self, lattice):
        """When a constant vector is demeaned, both outputs are NaN."""
        stat, pvalue = moran_permutation_test(
            np.ones(100), lattice.mats[0], 9, np.random.default_rng(0), demean=True
        )

        assert np.isnan(stat) and np.isnan(pvalue)


def test_moran_matrix_normalizes():
    """Unnormalized first matrices are row-normalized before use."""
    mat = np.array([[0.0, 2.0, 2.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    W = moran_matrix(SpatialWeightSet(mats=(mat,)))

    np.testing.assert_allclose(W.sum(axis=1), np.ones(3))


class TestDiagnoseResiduals:
    """Tests for diagnose_residuals function."""

    def test_shapes_and_lag_cap(self, lattice):
        """When the lag exceeds periods - 1, it is capped."""
        U = np.random.default_rng(4).standard_normal((4, 100))

        diag = diagnose_residuals(U, lattice, lags=10, permutations=49, seed=1)

        assert diag.lags == 3
        assert diag.acf.shape == (100, 3)
        assert diag.moran_i.shape == (4,)
        assert diag.acf_frame().shape == (100, 5)
        assert list(diag.moran_frame().columns) == ["period", "moran_i", "pvalue"]

    def test_spatial_share_detects_smooth_periods(self, lattice):
        """When every period is spatially smooth, all periods are flagged."""
        rng = np.random.default_rng(5)
        rows = np.arange(100) // 10 - 4.5
        U = np.vstack([rows + 0.1 * rng.standard_normal(100) for _ in range(6)])

        diag = diagnose_residuals(U, lattice, lags=2, permutations=199, seed=3)

        assert diag.share_spatial == 100.0
        assert diag.summary()["pct_periods_spatial"] == 100.0

    def test_autocorrelated_locations_detected(self, lattice):
        """When every location follows a persistent AR(1), most locations are flagged."""
        rng = np.random.default_rng(6)
        periods = 200
        U = np.zeros((periods, 100))
        for t in range(1, periods):
            U[t] = 0.9 * U[t - 1] + rng.standard_normal(100)

        diag = diagnose_residuals(U, lattice, lags=5, permutations=19, seed=3)

        assert diag.share_autocorrelated > 90.0

    def test_nominal_rejection_rates_under_white_noise(self):
        """When residuals are i.i.d., about 5% of locations and periods are flagged."""
        U = np.random.default_rng(7).standard_normal((200, 400))

        diag = diagnose_residuals(U, build_queen_contiguity(20), lags=5, permutations=199, seed=9)

        # three binomial standard deviations around 5% (4.5% for 199 permutations)
        assert 1.7 <= diag.share_autocorrelated <= 8.3
        assert 0.0 < diag.share_spatial <= 9.0


class TestResidualDiagnostics:
    """Tests for residual_diagnostics and attach_diagnostics functions."""

    def test_one_moran_row_per_transformed_period(self, data):
        """When run on a fit, there is one Moran statistic per transformed period."""
        fit = fit_2sls(data)
        diag = residual_diagnostics(fit, data, lags=3, permutations=49, seed=0)

        assert diag.moran_i.shape == (9,)
        assert diag.acf.shape == (25, 3)

    def test_attach_returns_copy(self, data):
        """When attached, the original fit stays without diagnostics."""
        fit = fit_2sls(data)
        enriched = attach_diagnostics(fit, data, lags=2, permutations=19, seed=0)

        assert fit.diagnostics is None
        assert enriched.diagnostics is not None
        np.testing.assert_array_equal(enriched.vector, fit.vector)


class TestPanelDescriptives:
    """Tests for panel_descriptives function."""

    def test_shapes(self, simulated, weights):
        """When computed, there is one ACF row per location and one Moran value per period."""
        desc = panel_descriptives(simulated.panel, weights, lags=3)

        assert desc.acf.shape == (25, 3)
        assert desc.st_moran.shape == (10,)
        np.testing.assert_allclose(desc.mean_log_square, simulated.ystar.mean(axis=1))
        assert "mean_log_square" in desc.acf_frame().columns


class TestEstimateVolatility:
    """Tests for estimate_volatility function."""

    def test_noiseless_panel(self, exact_data, exact_simulated, true_theta):
        """When eps* = 0, the fitted volatility equals the simulated one."""
        vol = estimate_volatility(true_theta, exact_data)

        assert vol.mu_eps == pytest.approx(0.0, abs=1e-9)
        np.testing.assert_allclose(vol.h, exact_simulated.h, rtol=1e-8)

    def test_normalization(self, data, simulated, true_theta):
        """When fitted, y^2 / h averages one over the panel."""
        vol = estimate_volatility(true_theta, data)
        ratio = simulated.y[:, 1:] ** 2 / vol.h

        assert ratio.mean() == pytest.approx(1.0, rel=1e-9)

    def test_summaries(self, data, true_theta):
        """When summarized, by-location and by-period means have n and T entries."""
        vol = estimate_volatility(true_theta, data)

        assert vol.by_location.shape == (25,)
        assert vol.by_period.index[0] == 1
        assert vol.by_period.shape == (10,)
