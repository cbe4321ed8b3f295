"""Bias / MAE tables for Monte Carlo experiments.

Parameters are rows; each experiment (error law x sample size) is a column.
The bias block comes first, then the MAE block, then optionally coverage.
"""

from typing import Literal, Sequence, Union

import numpy as np
import pandas as pd

from src.montecarlo.experiment import ExperimentResult

TableFormat = Literal["text", "csv"]
NO_DATA = "no data"

_DIST_NAMES = {"gaussian": "N(0,1)", "student_t": "t3"}


def column_label(result: ExperimentResult) -> str:
    dist = _DIST_NAMES.get(result.config.error_dist, result.config.error_dist)
    return f"{dist} n={result.n} T={result.T}"


def table_frame(
    results: Union[ExperimentResult, Sequence[ExperimentResult]],
    coverage: bool = False,
) -> pd.DataFrame:
    """Stack bias, MAE and optionally coverage blocks into one frame.

    Columns with no successful replication hold ``no data`` rather than NaN.

    :param results: One or more experiment results sharing a parameter list
    :type results: Union[ExperimentResult, Sequence[ExperimentResult]]
    :param coverage: Append the 95% coverage block
    :type coverage: bool
    :return: Frame indexed by (block, parameter)
    :rtype: pd.DataFrame
    """
    if isinstance(results, ExperimentResult):
        results = [results]
    blocks = [("bias", lambda r: r.bias), ("MAE", lambda r: r.mae)]
    if coverage:
        blocks.append(("coverage", lambda r: r.coverage()))

    columns = {}
    for result in results:
        values = []
        for _, stat in blocks:
            if result.successes:
                values.extend(float(v) for v in stat(result))
            else:
                values.extend([NO_DATA] * len(result.labels))
        columns[column_label(result)] = values

    labels = list(results[0].labels) if results else []
    index = pd.MultiIndex.from_tuples(
        [(block, label) for block, _ in blocks for label in labels],
        names=["block", "parameter"],
    )
    return pd.DataFrame(columns, index=index)


def emit_table(
    results: Union[ExperimentResult, Sequence[ExperimentResult]],
    fmt: TableFormat = "text",
    coverage: bool = False,
) -> str:
    """Render the bias/MAE table as aligned text or CSV.

    :param results: One or more experiment results
    :type results: Union[ExperimentResult, Sequence[ExperimentResult]]
    :param fmt: ``text`` or ``csv``
    :type fmt: str
    :param coverage: Include the coverage block
    :type coverage: bool
    :return: The rendered table; an explicit ``no data`` table when no
        replication succeeded anywhere
    :rtype: str
    """
    if isinstance(results, ExperimentResult):
        results = [results]
    if not results or all(r.successes == 0 for r in results):
        frame = pd.DataFrame({"status": [NO_DATA]}, index=pd.Index(["result"], name="table"))
    else:
        frame = table_frame(results, coverage)

    if fmt == "csv":
        return frame.to_csv()

    def fmt_cell(value) -> str:
        if isinstance(value, str):
            return value
        return NO_DATA if not np.isfinite(value) else f"{value:.4f}"

    return frame.map(fmt_cell).to_string() + "\n"


__all__ = ["NO_DATA", "column_label", "emit_table", "table_frame"]
