"""Readers for the harness CSV contract.

Two file kinds exist: per-run logs named ``run_<solver>_seed<N>.csv`` with
one row per training epoch, and a ``summary.csv`` with one row per solver.
Both are parsed strictly; a header that deviates from the contract raises
:class:`SchemaError` naming the offending column so a drifted producer is
caught at the boundary rather than as a silent misplot.
"""

import csv
import os
import re
from dataclasses import dataclass

import numpy as np

RUN_COLUMNS = ("epoch", "price", "server_utility", "reward")

SUMMARY_COLUMNS = ("solver", "final_utility_mean", "mean_utility_200_500",
                   "oracle_utility", "gap")

RUN_NAME_PATTERN = re.compile(r"^run_(?P<solver>.+)_seed(?P<seed>\d+)\.csv$")


class SchemaError(ValueError):
    """A CSV does not match the harness file contract."""


@dataclass(frozen=True)
class RunSeries:
    """One solver run as parsed columns; epochs are strictly increasing."""

    solver: str
    seed: int
    epochs: np.ndarray
    prices: np.ndarray
    server_utilities: np.ndarray
    rewards: np.ndarray


@dataclass(frozen=True)
class SummaryRow:
    """One solver's aggregate line; the window mean is None for short runs."""

    solver: str
    final_utility_mean: float
    mean_utility_200_500: float
    oracle_utility: float
    gap: float


def solver_and_seed(path):
    """Extract (solver, seed) from a run CSV filename."""
    match = RUN_NAME_PATTERN.match(os.path.basename(path))
    if match is None:
        raise SchemaError(
            f"{os.path.basename(path)!r} is not a run CSV name "
            f"(expected run_<solver>_seed<N>.csv)")
    return match.group("solver"), int(match.group("seed"))


def _check_header(found, expected, path):
    found = tuple(found)
    if found == expected:
        return
    missing = [c for c in expected if c not in found]
    extra = [c for c in found if c not in expected]
    if missing:
        raise SchemaError(f"{path}: missing column {missing[0]!r}")
    if extra:
        raise SchemaError(f"{path}: unexpected column {extra[0]!r}")
    for got, want in zip(found, expected):
        if got != want:
            raise SchemaError(
                f"{path}: column {got!r} out of place (expected {want!r})")
    raise SchemaError(f"{path}: malformed header {found!r}")


def _read_rows(path, expected):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        _check_header(header, expected, path)
        rows = [row for row in reader if row]
    for i, row in enumerate(rows):
        if len(row) != len(expected):
            raise SchemaError(f"{path}: row {i + 2} has {len(row)} fields, "
                              f"expected {len(expected)}")
    return rows


def read_run_csv(path):
    """Parse one per-epoch run log, checking the four-column schema."""
    solver, seed = solver_and_seed(path)
    rows = _read_rows(path, RUN_COLUMNS)
    if not rows:
        raise SchemaError(f"{path}: run CSV has no data rows")
    epochs = np.array([int(r[0]) for r in rows], dtype=np.int64)
    if not np.all(np.diff(epochs) > 0):
        raise SchemaError(f"{path}: epoch column must be strictly increasing")
    return RunSeries(
        solver=solver,
        seed=seed,
        epochs=epochs,
        prices=np.array([float(r[1]) for r in rows], dtype=np.float64),
        server_utilities=np.array([float(r[2]) for r in rows],
                                  dtype=np.float64),
        rewards=np.array([float(r[3]) for r in rows], dtype=np.float64),
    )


def read_summary_csv(path):
    """Parse the per-solver summary, checking the five-column schema."""
    rows = _read_rows(path, SUMMARY_COLUMNS)
    if not rows:
        raise SchemaError(f"{path}: summary CSV has no data rows")
    out = []
    for r in rows:
        out.append(SummaryRow(
            solver=r[0],
            final_utility_mean=float(r[1]),
            mean_utility_200_500=None if r[2] == "" else float(r[2]),
            oracle_utility=float(r[3]),
            gap=float(r[4]),
        ))
    return out
