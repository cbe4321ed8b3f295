"""Tests for the panel transformations."""

import numpy as np
import pytest

from src.estimation.transforms import (
    demean_cross_section,
    first_difference,
    helmert,
    helmert_constants,
    log_square,
    transform_panel,
)
from src.models.panel import Panel
from src.utils.errors import DataError


class TestHelmert:
    """Tests for helmert function."""

    def test_rows_are_orthonormal(self):
        """When applied to the identity, the implied operator F has FF' = I and F1 = 0."""
        T = 7
        F = helmert(np.eye(T)).T

        np.testing.assert_allclose(F @ F.T, np.eye(T - 1), atol=1e-12)
        np.testing.assert_allclose(F @ np.ones(T), np.zeros(T - 1), atol=1e-12)

    def test_explicit_values(self):
        """When T = 3, matches the hand-computed forward deviations."""
        row = np.array([[1.0, 2.0, 6.0]])
        out = helmert(row)

        expected = [np.sqrt(2 / 3) * (1.0 - 4.0), np.sqrt(1 / 2) * (2.0 - 6.0)]
        np.testing.assert_allclose(out[0], expected)

    def test_removes_unit_effects(self):
        """When a unit-specific constant is added, the transform is unchanged."""
        rng = np.random.default_rng(0)
        mat = rng.standard_normal((5, 8))
        shifted = mat + rng.standard_normal((5, 1))

        np.testing.assert_allclose(helmert(shifted), helmert(mat), atol=1e-12)

    def test_regressor_blocks(self):
        """When given an n x T x k block, each regressor is transformed on its own."""
        rng = np.random.default_rng(1)
        block = rng.standard_normal((4, 6, 3))
        out = helmert(block)

        assert out.shape == (4, 5, 3)
        for j in range(3):
            np.testing.assert_allclose(out[:, :, j], helmert(block[:, :, j]))

    def test_matches_demeaning_eigenvectors(self):
        """When compared with the unit-eigenvalue eigenvectors of J_T, spans the same space."""
        T = 6
        rng = np.random.default_rng(5)
        X = rng.standard_normal((5, T))
        J = np.eye(T) - np.full((T, T), 1.0 / T)
        values, vectors = np.linalg.eigh(J)
        E1 = vectors[:, values > 0.5]
        F = helmert(np.eye(T)).T
        rotation = E1.T @ F.T

        assert E1.shape == (T, T - 1)
        np.testing.assert_allclose(helmert(X) @ helmert(X).T, X @ E1 @ E1.T @ X.T, atol=1e-10)
        np.testing.assert_allclose(F.T @ F, J, atol=1e-10)
        np.testing.assert_allclose(rotation.T @ rotation, np.eye(T - 1), atol=1e-10)
        np.testing.assert_allclose(E1 @ rotation, F.T, atol=1e-10)

    def test_single_period_rejected(self):
        """When only one period is present, raises DataError."""
        with pytest.raises(DataError):
            helmert(np.ones((3, 1)))


def test_helmert_constants():
    """c_t = sqrt((T-t)/(T-t+1)) for t = 1..T-1."""
    np.testing.assert_allclose(helmert_constants(4), np.sqrt([3 / 4, 2 / 3, 1 / 2]))


class TestLogSquare:
    """Tests for log_square function."""

    def test_values(self):
        """When outcomes are nonzero, returns log(y^2) regardless of sign."""
        np.testing.assert_allclose(log_square(np.array([[-2.0, 0.5]])), [[np.log(4.0), np.log(0.25)]])

    def test_zero_outcome_lists_rows(self):
        """When an outcome is exactly zero, raises DataError with its (unit, time) pair."""
        y = np.ones((3, 4))
        y[1, 2] = 0.0
        y[2, 0] = 0.0

        with pytest.raises(DataError) as exc_info:
            log_square(y)

        assert exc_info.value.rows == [(1, 2), (2, 0)]
        assert exc_info.value.field == "y"


class TestDemeanCrossSection:
    """Tests for demean_cross_section function."""

    def test_columns_sum_to_zero(self):
        """When demeaned, every period sums to zero across units."""
        rng = np.random.default_rng(2)
        out = demean_cross_section(rng.standard_normal((6, 4)))

        np.testing.assert_allclose(out.sum(axis=0), np.zeros(4), atol=1e-12)

    def test_removes_time_effects(self):
        """When a period-specific constant is added, the result is unchanged."""
        rng = np.random.default_rng(3)
        mat = rng.standard_normal((6, 4))

        np.testing.assert_allclose(
            demean_cross_section(mat + rng.standard_normal(4)), demean_cross_section(mat), atol=1e-12
        )

    def test_single_unit_rejected(self):
        """When n < 2, raises DataError."""
        with pytest.raises(DataError):
            demean_cross_section(np.ones((1, 4)))


def test_first_difference():
    """Differences run along time."""
    np.testing.assert_allclose(first_difference(np.array([[1.0, 4.0, 9.0]])), [[3.0, 5.0]])


def test_transform_panel_blocks():
    """The transformed outcome and lag blocks are Helmert transforms of shifted log squares."""
    rng = np.random.default_rng(4)
    y = rng.standard_normal((5, 6)) + 3.0
    x = rng.standard_normal((5, 5, 2))
    tp = transform_panel(Panel(y=y, x=x))
    ystar = np.log(y ** 2)

    np.testing.assert_allclose(tp.ystar2, helmert(ystar[:, 1:]))
    np.testing.assert_allclose(tp.ylag2, helmert(ystar[:, :-1]))
    assert tp.xstar.shape == (5, 4, 2)
    assert tp.c.shape == (4,)
