"""Charts over solver training logs.

This package is a pure view over the CSV files the training harness writes:
it never recomputes utilities, it only aggregates and draws them. The file
schemas are restated in :mod:`figures.io` so the package stands alone.
"""

from .charts import BarChart, ChartSpec, CurveChart, moving_average, plot_bars, plot_curves
from .io import RUN_COLUMNS, SUMMARY_COLUMNS, SchemaError, read_run_csv, read_summary_csv

__all__ = [
    "BarChart",
    "ChartSpec",
    "CurveChart",
    "RUN_COLUMNS",
    "SUMMARY_COLUMNS",
    "SchemaError",
    "moving_average",
    "plot_bars",
    "plot_curves",
    "read_run_csv",
    "read_summary_csv",
]
