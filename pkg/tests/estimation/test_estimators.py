"""Tests for the estimator suite."""

from dataclasses import replace

import numpy as np
import pytest

from src.estimation.estimators import (
    GmmFit,
    fit_2sls,
    fit_best_gmm,
    fit_initial_gmm,
    fit_optimal_gmm,
    fit_stage,
    recover_effects,
)
from src.estimation.moments import MomentFunction, MomentSet, default_iv, prepare_data
from src.estimation.optimizer import GmmObjective
from src.models.base_models import ModelSpec
from src.simulation.dgp import simulate
from src.spatial.weights import build_queen_contiguity
from src.utils.errors import ConfigError

STAGES = ("2sls", "initial", "optimal", "best")


@pytest.fixture
def initial_fit(data):
    """Initial GMM fit on the noisy panel."""
    return fit_initial_gmm(data)


class TestExactRecovery:
    """Tests for every stage on a noiseless panel."""

    @pytest.mark.parametrize("stage", STAGES)
    def test_recovers_true_theta(self, exact_data, true_theta, stage):
        """When eps* = 0, each stage returns the true parameters."""
        fit = fit_stage(exact_data, stage)

        np.testing.assert_allclose(fit.vector, true_theta, atol=1e-6)
        assert fit.stage == stage
        assert fit.moment_report["exact_fit"]

    def test_effects_recovered(self, exact_data, exact_simulated, true_theta):
        """When eps* = 0, alpha is recovered up to mean(mu) and mu up to centering."""
        alpha, mu = recover_effects(true_theta, exact_data)
        shift = exact_simulated.mu.mean()

        np.testing.assert_allclose(alpha, exact_simulated.alpha + shift, atol=1e-9)
        np.testing.assert_allclose(mu, exact_simulated.mu - shift, atol=1e-9)
        assert mu.sum() == pytest.approx(0.0, abs=1e-9)


class TestFit2sls:
    """Tests for fit_2sls function."""

    def test_fit_fields(self, data):
        """When fitted, returns a 2SLS fit with a positive-definite covariance."""
        fit = fit_2sls(data)

        assert isinstance(fit, GmmFit)
        assert fit.vcov_form == "tsls"
        assert fit.objective == 0.0
        assert np.isnan(fit.mu4)
        assert fit.labels == ("rho", "gamma", "delta", "beta_0", "beta_1")
        np.testing.assert_allclose(fit.vcov, fit.vcov.T)
        assert np.all(np.linalg.eigvalsh(fit.vcov) > 0)
        assert len(fit.ladder) == 1

    def test_effect_lengths(self, data):
        """When fitted, alpha has T entries and mu has n."""
        fit = fit_2sls(data)

        assert fit.alpha_hat.shape == (10,)
        assert fit.mu_hat.shape == (25,)


class TestFitInitialGmm:
    """Tests for fit_initial_gmm function."""

    def test_is_local_minimizer(self, data, initial_fit):
        """When perturbed in any direction, the identity-weighted objective does not fall."""
        objective = GmmObjective(MomentFunction(data, default_iv(data)))
        base = objective(initial_fit.vector)

        assert base == pytest.approx(initial_fit.objective, rel=1e-8)
        for e in np.eye(data.K):
            for step in (1e-3, -1e-3):
                assert objective(initial_fit.vector + step * e) >= base - 1e-12

    def test_sandwich_covariance(self, initial_fit):
        """When fitted, reports the sandwich covariance and positive standard errors."""
        assert initial_fit.vcov_form == "sandwich"
        assert np.all(initial_fit.se > 0)
        assert [r.stage for r in initial_fit.ladder] == ["2sls", "initial"]


class TestFitOptimalGmm:
    """Tests for fit_optimal_gmm function."""

    def test_auto_picks_finite_t(self, data, initial_fit):
        """When T-1 is small, the automatic covariance is the finite-T form."""
        fit = fit_optimal_gmm(data, initial_fit)

        assert fit.vcov_form == "finite_t"
        assert [r.stage for r in fit.ladder] == ["2sls", "initial", "optimal"]

    def test_forms_share_the_estimate(self, data, initial_fit):
        """When only the covariance form changes, the estimate is the same."""
        large = fit_optimal_gmm(data, initial_fit, vcov_form="large_t")
        finite = fit_optimal_gmm(data, initial_fit, vcov_form="finite_t")

        assert large.vcov_form == "large_t"
        np.testing.assert_allclose(large.vector, finite.vector)
        assert np.all(large.se > 0)
        assert np.all(finite.se > 0)

    def test_reports_weighting(self, data, initial_fit):
        """When fitted, the moment report carries the Omega condition number."""
        fit = fit_optimal_gmm(data, initial_fit)

        assert fit.moment_report["omega_condition"] >= 1.0
        assert fit.moment_report["moment_set"] == "default"


class TestFitBestGmm:
    """Tests for fit_best_gmm function."""

    def test_best_moments_used(self, data, initial_fit):
        """When fitted, the best moment set has p quadratic and p+1+p+k linear moments."""
        fit = fit_best_gmm(data, initial_fit)

        assert fit.stage == "best"
        assert fit.moment_report["moment_set"] == "best"
        assert fit.moment_report["m"] == 1
        assert fit.moment_report["k_q"] == 5
        assert np.all(np.isfinite(fit.se))

    def test_summary_frame(self, data, initial_fit):
        """When summarized, returns one row per parameter with estimate, se, t and p-value."""
        frame = fit_best_gmm(data, initial_fit).summary_frame()

        assert list(frame.columns) == ["estimate", "se", "t", "p_value"]
        assert list(frame.index) == ["rho", "gamma", "delta", "beta_0", "beta_1"]
        assert frame["p_value"].between(0, 1).all()


class TestFitStage:
    """Tests for fit_stage function."""

    def test_unknown_stage(self, data):
        """When the stage is unknown, raises ConfigError."""
        with pytest.raises(ConfigError) as exc_info:
            fit_stage(data, "third")

        assert exc_info.value.field == "stage"


class TestRecoverEffects:
    """Tests for recover_effects function."""

    def test_accepts_fit_or_vector(self, data, initial_fit):
        """When given a fit or its vector, returns the same effects."""
        from_fit = recover_effects(initial_fit, data)
        from_vector = recover_effects(initial_fit.vector, data)

        np.testing.assert_allclose(from_fit[0], from_vector[0])
        np.testing.assert_allclose(from_fit[1], from_vector[1])

    def test_no_time_effects(self, simulated, weights, true_theta):
        """When the model has no time effects, alpha is zero and mu averages over time."""
        data = prepare_data(simulated.panel, weights, ModelSpec(p=1, k=2, has_time_effects=False))
        alpha, mu = recover_effects(true_theta, data)

        assert np.all(alpha == 0.0)
        assert mu.shape == (25,)


class TestJustIdentified:
    """Tests for the estimators with as many instruments as parameters."""

    @pytest.fixture
    def just_moments(self, data):
        """Five linear instruments and no quadratic moments."""
        base = default_iv(data)
        keep = [base.q_names.index(name) for name in ("ylag", "M1ylag", "x1", "x2", "M1x1")]
        return MomentSet(Q=base.Q[:, :, keep], P=(), label="just", q_names=tuple(base.q_names[i] for i in keep))

    def test_optimal_equals_2sls(self, data, just_moments):
        """When m = 0 and k_q = K, optimal GMM returns the 2SLS estimate."""
        tsls = fit_2sls(data, just_moments)
        optimal = fit_optimal_gmm(data, moments=just_moments)

        np.testing.assert_allclose(optimal.vector, tsls.vector, atol=1e-8)
        assert optimal.moment_report["m"] == 0
        assert optimal.objective == pytest.approx(0.0, abs=1e-10)


class TestScaleEquivariance:
    """Tests for estimates after rescaling every outcome."""

    def test_theta_unchanged_and_shift_in_time_effects(self, simulated, weights, spec, data):
        """When y is multiplied by c, theta and mu are unchanged and alpha absorbs the shift."""
        scale = 3.0
        rescaled = replace(simulated.panel, y=scale * simulated.panel.y)
        scaled_data = prepare_data(rescaled, weights, spec)

        base = fit_optimal_gmm(data)
        moved = fit_optimal_gmm(scaled_data)

        np.testing.assert_allclose(moved.vector, base.vector, atol=1e-6)
        rho, gamma, delta = base.vector[:3]
        shift = (1.0 - rho - gamma - delta) * np.log(scale ** 2)
        np.testing.assert_allclose(moved.alpha_hat, base.alpha_hat + shift, atol=1e-6)
        np.testing.assert_allclose(moved.mu_hat, base.mu_hat, atol=1e-6)


class TestPrecisionFromQuadraticMoments:
    """Tests for the efficiency gain of the best stage at the M1 size."""

    @pytest.fixture
    def m1_data(self, dgp_config):
        """An 8 x 8 lattice over 20 periods with gaussian innovations."""
        cfg = dgp_config.model_copy(
            update={"T": 20, "seed": 11, "weights": dgp_config.weights.model_copy(update={"side": 8})}
        )
        W = build_queen_contiguity(8)
        return prepare_data(simulate(cfg, W).panel, W, cfg.spec)

    def test_best_rho_error_well_below_2sls(self, m1_data):
        """When quadratic moments are added, the standard error of rho falls far below 2SLS."""
        tsls = fit_2sls(m1_data)
        best = fit_best_gmm(m1_data, tsls=tsls)

        assert 0.06 < tsls.se[0] < 0.25
        assert best.se[0] < 0.6 * tsls.se[0]
        assert 0.02 < best.se[0] < 0.08
