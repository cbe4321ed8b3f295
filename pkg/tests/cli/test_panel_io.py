"""Tests for long-format panel CSV reading and writing."""

import numpy as np
import pandas as pd
import pytest

from src.cli.panel_io import (
    frame_to_panel,
    make_time_dummies,
    panel_to_frame,
    read_panel_csv,
    regressor_columns,
    write_panel_csv,
)
from src.models.panel import Panel
from src.utils.errors import DataError


@pytest.fixture
def panel():
    """Three units, T = 3, two regressors."""
    rng = np.random.default_rng(8)
    return Panel(y=rng.standard_normal((3, 4)) + 5.0, x=rng.standard_normal((3, 3, 2)))


@pytest.fixture
def frame(panel):
    """Long-format frame of the panel fixture."""
    return panel_to_frame(panel)


class TestPanelCsv:
    """Tests for write_panel_csv and read_panel_csv functions."""

    def test_round_trip_is_exact(self, panel, tmp_path):
        """When written and read back, outcomes and regressors are bit-identical."""
        path = write_panel_csv(panel, tmp_path / "panel.csv")

        loaded = read_panel_csv(path)

        assert np.array_equal(loaded.y, panel.y)
        assert np.array_equal(loaded.x, panel.x)
        assert loaded.names == ["x1", "x2"]

    def test_period_zero_regressors_empty(self, frame):
        """When exported, regressor cells of period 0 are missing."""
        first = frame[frame["time"] == 0]

        assert first[["x1", "x2"]].isna().all().all()
        assert list(frame.columns) == ["unit", "time", "y", "x1", "x2"]

    def test_rows_shuffled(self, panel, frame):
        """When rows arrive out of order, the panel is still assembled by unit and time."""
        shuffled = frame.sample(frac=1.0, random_state=0)

        loaded = frame_to_panel(shuffled)

        assert np.array_equal(loaded.y, panel.y)


class TestLayoutChecks:
    """Tests for the validation done by frame_to_panel."""

    def test_zero_outcome_rows(self, frame):
        """When outcomes are zero, raises DataError listing the CSV rows."""
        frame.loc[[1, 5], "y"] = 0.0

        with pytest.raises(DataError) as exc_info:
            frame_to_panel(frame)

        assert exc_info.value.rows == [3, 7]
        assert exc_info.value.field == "y"

    def test_duplicate_pairs(self, frame):
        """When a (unit, time) pair repeats, raises DataError."""
        duplicated = pd.concat([frame, frame.iloc[[2]]], ignore_index=True)

        with pytest.raises(DataError, match="duplicate"):
            frame_to_panel(duplicated)

    def test_unbalanced(self, frame):
        """When a unit misses a period, raises DataError naming it."""
        with pytest.raises(DataError, match="unbalanced"):
            frame_to_panel(frame.drop(index=6))

    def test_gap_in_time(self, frame):
        """When a period is missing for every unit, raises DataError."""
        with pytest.raises(DataError, match="contiguous"):
            frame_to_panel(frame[frame["time"] != 2])

    def test_missing_column(self, frame):
        """When y is absent, raises DataError."""
        with pytest.raises(DataError, match="y"):
            frame_to_panel(frame.drop(columns="y"))

    def test_missing_regressor(self, frame):
        """When a sample-period regressor is missing, raises DataError."""
        frame.loc[2, "x1"] = np.nan

        with pytest.raises(DataError) as exc_info:
            frame_to_panel(frame)

        assert exc_info.value.field == "x"


def test_regressor_columns_numeric_order():
    """x10 sorts after x2."""
    frame = pd.DataFrame(columns=["unit", "x10", "x2", "x1", "xx"])

    assert regressor_columns(frame) == ["x1", "x2", "x10"]


class TestMakeTimeDummies:
    """Tests for make_time_dummies function."""

    def test_month_dummies_drop_reference(self):
        """When three months appear, two indicator columns are added."""
        frame = pd.DataFrame({"date": ["2020-01-31", "2020-02-29", "2020-03-31"]})

        out = make_time_dummies(frame, "date", ["month"])

        assert list(out.columns) == ["date", "month_2", "month_3"]
        assert out["month_3"].tolist() == [0.0, 0.0, 1.0]

    def test_unknown_kind(self):
        """When the kind is unknown, raises DataError."""
        with pytest.raises(DataError) as exc_info:
            make_time_dummies(pd.DataFrame({"date": ["2020-01-01"]}), "date", ["week"])

        assert exc_info.value.field == "dummies"

    def test_missing_date_column(self):
        """When the date column is absent, raises DataError."""
        with pytest.raises(DataError) as exc_info:
            make_time_dummies(pd.DataFrame({"d": ["2020-01-01"]}), "date", ["year"])

        assert exc_info.value.field == "date_column"
