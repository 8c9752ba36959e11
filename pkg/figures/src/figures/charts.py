"""Two chart types over harness CSVs: training curves and summary bars.

Everything drawn is a direct aggregation of file contents. Curves show the
per-epoch server utility averaged over seeds (optionally smoothed by a
trailing moving average) with the oracle utility as a horizontal reference;
bars show each solver's final and window-mean utility exactly as the summary
CSV states them. Rendering uses the Agg backend so no display is needed, and
identical inputs produce identical image bytes.
"""

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import read_run_csv, read_summary_csv, solver_and_seed

FIGSIZE = (7.0, 4.5)
DPI = 120


@dataclass(frozen=True)
class ChartSpec:
    """Inputs and outputs of one chart build.

    ``run_csvs`` are per-epoch logs (one file per solver/seed pair),
    ``summary_csv`` is the per-solver aggregate table, and ``smoothing``
    is a trailing moving-average window in epochs (1 = raw seed means).
    """

    run_csvs: tuple
    summary_csv: str
    curves_path: str
    bars_path: str
    smoothing: int = 1

    def __post_init__(self):
        object.__setattr__(self, "run_csvs", tuple(self.run_csvs))
        if int(self.smoothing) != self.smoothing or self.smoothing < 1:
            raise ValueError("smoothing window must be an integer >= 1")
        if not self.run_csvs:
            raise ValueError("need at least one run CSV")
        for path in (*self.run_csvs, self.summary_csv):
            if not os.path.isfile(path):
                raise ValueError(f"input file not found: {path}")


@dataclass(frozen=True)
class CurveChart:
    """What the curves figure actually drew, read back from its artists."""

    path: str
    n_traces: int
    xlim: tuple
    ylim: tuple
    labels: tuple
    epochs: dict
    series: dict
    oracle_utility: float


@dataclass(frozen=True)
class BarChart:
    """What the bars figure actually drew, read back from its artists."""

    path: str
    n_bars: int
    xlim: tuple
    ylim: tuple
    solvers: tuple
    final_heights: np.ndarray
    window_heights: np.ndarray


def moving_average(values, window):
    """Trailing mean over up to ``window`` epochs; partial at the start.

    Keeps the output the same length as the input so the epoch axis is
    unchanged; window 1 is the identity.
    """
    if int(window) != window or window < 1:
        raise ValueError("smoothing window must be an integer >= 1")
    v = np.asarray(values, dtype=np.float64)
    if window == 1:
        return v.copy()
    out = np.empty_like(v)
    for i in range(len(v)):
        lo = max(0, i - int(window) + 1)
        out[i] = np.mean(v[lo:i + 1])
    return out


def group_runs(run_csvs):
    """Parse run CSVs and group them by solver, keeping encounter order."""
    groups = {}
    for path in run_csvs:
        solver, _ = solver_and_seed(path)
        groups.setdefault(solver, []).append(read_run_csv(path))
    return groups


def seed_mean(runs):
    """Average server utility across seeds; epochs must line up exactly."""
    first = runs[0]
    for run in runs[1:]:
        if not np.array_equal(run.epochs, first.epochs):
            raise ValueError(
                f"runs for solver {first.solver!r} disagree on epochs "
                f"(seed {run.seed} vs seed {first.seed})")
    utilities = np.stack([run.server_utilities for run in runs])
    return first.epochs, np.mean(utilities, axis=0)


def _oracle_utility(summary_rows):
    values = {row.oracle_utility for row in summary_rows}
    if len(values) != 1:
        raise ValueError("summary rows disagree on oracle_utility")
    return values.pop()


def _save(fig, path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)


def plot_curves(spec):
    """Seed-averaged utility per epoch, one line per solver, oracle dashed."""
    groups = group_runs(spec.run_csvs)
    oracle = _oracle_utility(read_summary_csv(spec.summary_csv))
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    epochs_by_solver, series = {}, {}
    for solver, runs in groups.items():
        epochs, mean = seed_mean(runs)
        smoothed = moving_average(mean, spec.smoothing)
        ax.plot(epochs, smoothed, linewidth=1.6, label=solver)
        epochs_by_solver[solver] = epochs
        series[solver] = smoothed
    ax.axhline(oracle, color="black", linestyle="--", linewidth=1.0,
               label="oracle")
    ax.set_xlabel("training epoch")
    ax.set_ylabel("server utility (mean over seeds)")
    if spec.smoothing > 1:
        ax.set_title(f"trailing mean over {spec.smoothing} epochs")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    n_traces = len(ax.lines)
    xlim, ylim = ax.get_xlim(), ax.get_ylim()
    drawn = {line.get_label(): np.asarray(line.get_ydata())
             for line in ax.lines if line.get_label() in groups}
    _save(fig, spec.curves_path)
    return CurveChart(
        path=spec.curves_path,
        n_traces=n_traces,
        xlim=xlim,
        ylim=ylim,
        labels=tuple(groups),
        epochs=epochs_by_solver,
        series=drawn,
        oracle_utility=oracle,
    )


def plot_bars(spec):
    """Grouped final/window-mean utility bars, heights straight from the CSV."""
    rows = read_summary_csv(spec.summary_csv)
    for row in rows:
        if row.mean_utility_200_500 is None:
            raise ValueError(
                f"summary row {row.solver!r} has an empty "
                f"mean_utility_200_500; bars need a completed window")
    x = np.arange(len(rows), dtype=np.float64)
    width = 0.38
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    final_bars = ax.bar(x - width / 2, [r.final_utility_mean for r in rows],
                        width, label="final utility")
    window_bars = ax.bar(x + width / 2,
                         [r.mean_utility_200_500 for r in rows],
                         width, label="mean utility, epochs 200-500")
    ax.set_xticks(x)
    ax.set_xticklabels([r.solver for r in rows])
    ax.set_ylabel("server utility (mean over seeds)")
    ax.grid(alpha=0.3, axis="y")
    ax.legend()
    fig.tight_layout()
    info = BarChart(
        path=spec.bars_path,
        n_bars=len(final_bars) + len(window_bars),
        xlim=ax.get_xlim(),
        ylim=ax.get_ylim(),
        solvers=tuple(r.solver for r in rows),
        final_heights=np.array([rect.get_height() for rect in final_bars]),
        window_heights=np.array([rect.get_height() for rect in window_bars]),
    )
    _save(fig, spec.bars_path)
    return info
