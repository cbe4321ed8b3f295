"""Long-format panel CSV reading and writing.

One row per (unit, time) with header ``unit,time,y,x1..xk``. Period 0 holds
the initial outcome Y_0; its regressor cells are ignored and written empty.
"""

import re
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.models.panel import Panel
from src.utils.errors import DataError
from src.utils.logging import get_logger

logger = get_logger("panel_io")

REQUIRED_COLUMNS = ("unit", "time", "y")
_REGRESSOR = re.compile(r"^x(\d+)$")
DUMMY_KINDS = ("month", "year")


def _csv_rows(index: Iterable[int]) -> List[int]:
    # header is line 1
    return [int(i) + 2 for i in index]


def regressor_columns(frame: pd.DataFrame) -> List[str]:
    """Columns named x1, x2, ... in numeric order."""
    found = [(int(m.group(1)), col) for col in frame.columns if (m := _REGRESSOR.match(str(col)))]
    return [col for _, col in sorted(found)]


def make_time_dummies(
    frame: pd.DataFrame, date_column: str, kinds: Sequence[str]
) -> pd.DataFrame:
    """Add month_* / year_* indicator columns built from ``date_column``.

    One reference level per kind is dropped so the dummies are not collinear
    with the fixed effects.

    :param frame: Long-format panel
    :type frame: pd.DataFrame
    :param date_column: Column parseable by ``pd.to_datetime``
    :type date_column: str
    :param kinds: Any of ``month`` and ``year``
    :type kinds: Sequence[str]
    :return: Copy of ``frame`` with the indicator columns appended
    :rtype: pd.DataFrame
    :raises DataError: On an unknown kind, a missing column or unparseable dates
    """
    unknown = [k for k in kinds if k not in DUMMY_KINDS]
    if unknown:
        raise DataError(
            f"unknown dummy kind(s) {unknown}; valid kinds: {', '.join(DUMMY_KINDS)}",
            field="dummies",
        )
    if date_column not in frame.columns:
        raise DataError(f"date column {date_column!r} not found", field="date_column")
    try:
        dates = pd.to_datetime(frame[date_column])
    except (ValueError, TypeError) as exc:
        raise DataError(f"cannot parse {date_column!r} as dates: {exc}", field="date_column") from exc

    out = frame.copy()
    for kind in kinds:
        values = getattr(dates.dt, kind)
        dummies = pd.get_dummies(values, prefix=kind, drop_first=True, dtype=float)
        out = pd.concat([out, dummies], axis=1)
    return out


def _check_layout(frame: pd.DataFrame) -> None:
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"panel file lacks column(s): {', '.join(missing)}", field="header")
    if frame.empty:
        raise DataError("panel file has no rows", field="rows")

    dup = frame.duplicated(subset=["unit", "time"], keep=False)
    if dup.any():
        rows = _csv_rows(frame.index[dup])
        raise DataError(f"duplicate (unit, time) pairs on rows {rows[:10]}", field="time", rows=rows)

    if frame["y"].isna().any():
        rows = _csv_rows(frame.index[frame["y"].isna()])
        raise DataError(f"missing outcomes on rows {rows[:10]}", field="y", rows=rows)

    zero = frame["y"] == 0
    if zero.any():
        rows = _csv_rows(frame.index[zero])
        raise DataError(
            f"{len(rows)} zero outcome(s); log(y^2) is undefined on rows {rows[:10]}",
            field="y",
            rows=rows,
        )

    times = np.sort(frame["time"].unique())
    if not np.array_equal(times, np.arange(times[0], times[0] + times.size)):
        raise DataError("time indices are not contiguous", field="time")
    counts = frame.groupby("unit")["time"].count()
    if (counts != times.size).any():
        short = counts.index[counts != times.size].tolist()
        raise DataError(f"unbalanced panel; units with missing periods: {short[:10]}", field="time")


def frame_to_panel(frame: pd.DataFrame, regressors: Optional[Sequence[str]] = None) -> Panel:
    """Validate a long-format frame and pivot it into a Panel.

    :param frame: Long-format panel
    :type frame: pd.DataFrame
    :param regressors: Regressor columns; ``x1..xk`` if omitted
    :type regressors: Optional[Sequence[str]]
    :return: The panel, units and periods in sorted order
    :rtype: Panel
    :raises DataError: On layout violations; offending CSV rows are listed
    """
    frame = frame.reset_index(drop=True)
    _check_layout(frame)
    regressors = list(regressors) if regressors is not None else regressor_columns(frame)

    frame = frame.sort_values(["unit", "time"], kind="mergesort")
    units = pd.unique(frame["unit"])
    times = np.sort(frame["time"].unique())
    n, periods = units.size, times.size
    if periods < 2:
        raise DataError("panel needs at least two periods", field="time")

    y = frame["y"].to_numpy(dtype=float).reshape(n, periods)
    sample = frame[frame["time"] != times[0]]
    if regressors:
        x_values = sample[regressors]
        if x_values.isna().any().any():
            rows = _csv_rows(x_values.index[x_values.isna().any(axis=1)])
            raise DataError(f"missing regressors on rows {rows[:10]}", field="x", rows=rows)
        x = x_values.to_numpy(dtype=float).reshape(n, periods - 1, len(regressors))
    else:
        x = np.zeros((n, periods - 1, 0))

    logger.info(
        "Panel loaded", extra={"n": int(n), "T": int(periods - 1), "k": len(regressors)}
    )
    return Panel(
        y=y,
        x=x,
        unit_ids=units.tolist(),
        time_ids=times.tolist(),
        regressor_names=regressors,
    )


def read_panel_csv(
    path: Union[str, Path],
    dummies: Optional[Sequence[str]] = None,
    date_column: Optional[str] = None,
) -> Panel:
    """Read a long-format panel CSV.

    :param path: CSV file
    :type path: Union[str, Path]
    :param dummies: Dummy kinds appended as regressors (``month``, ``year``)
    :type dummies: Optional[Sequence[str]]
    :param date_column: Date column the dummies are built from
    :type date_column: Optional[str]
    :return: The panel
    :rtype: Panel
    :raises DataError: On layout violations
    :raises OSError: If the file cannot be read
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    regressors = regressor_columns(frame)
    if dummies:
        if not date_column:
            raise DataError("--dummies needs --date-column", field="date_column")
        before = set(frame.columns)
        frame = make_time_dummies(frame, date_column, dummies)
        regressors += [c for c in frame.columns if c not in before]
    return frame_to_panel(frame, regressors)


def panel_to_frame(panel: Panel) -> pd.DataFrame:
    """Long-format frame of ``panel``; regressor cells of period 0 are NaN."""
    n, periods = panel.n, panel.T + 1
    units = list(panel.unit_ids) if panel.unit_ids is not None else list(range(n))
    times = list(panel.time_ids) if panel.time_ids is not None else list(range(periods))
    frame = pd.DataFrame(
        {
            "unit": np.repeat(units, periods),
            "time": np.tile(times, n),
            "y": panel.y.reshape(-1),
        }
    )
    x = np.concatenate([np.full((n, 1, panel.k), np.nan), panel.x], axis=1)
    for j in range(panel.k):
        frame[f"x{j + 1}"] = x[:, :, j].reshape(-1)
    return frame


def write_panel_csv(panel: Panel, path: Union[str, Path]) -> Path:
    """Write ``panel`` as a long-format CSV.

    Floats are written with their shortest round-trip representation.

    :param panel: Panel to write
    :type panel: Panel
    :param path: Destination file
    :type path: Union[str, Path]
    :return: The written path
    :rtype: Path
    :raises OSError: If the file cannot be written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    panel_to_frame(panel).to_csv(path, index=False)
    return path


__all__ = [
    "frame_to_panel",
    "make_time_dummies",
    "panel_to_frame",
    "read_panel_csv",
    "regressor_columns",
    "write_panel_csv",
]
