"""Per-epoch training logs and their CSV persistence.

All three solvers emit the same four-column record so the harness can
compare them uniformly; the auxiliary loss column is an in-memory extra
(critic or value regression loss, zero for random search) and never reaches
the CSV. Floats are serialized with repr() so files round-trip exactly and
identical runs produce identical bytes; writes go through a temp file and
os.replace so readers never observe a partial file.
"""

import os
from dataclasses import dataclass, field

import numpy as np

RUN_COLUMNS = ("epoch", "price", "server_utility", "reward")


@dataclass
class RunLog:
    """One solver run: per-epoch price, realized utility, and reward."""

    epochs: np.ndarray
    prices: np.ndarray
    server_utilities: np.ndarray
    rewards: np.ndarray
    aux_losses: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.aux_losses is None:
            self.aux_losses = np.zeros_like(self.prices)
        n = len(self.epochs)
        for arr in (self.prices, self.server_utilities, self.rewards,
                    self.aux_losses):
            if len(arr) != n:
                raise ValueError("log columns must have equal length")
        if n > 0 and not np.all(np.diff(self.epochs) > 0):
            raise ValueError("epoch index must be strictly increasing")

    def __len__(self):
        return len(self.epochs)


def empty_log():
    z = np.zeros(0, dtype=np.float64)
    return RunLog(np.zeros(0, dtype=np.int64), z.copy(), z.copy(), z.copy())


def make_log(n_epochs):
    """Preallocated log for exactly n_epochs rows, epochs numbered from 1."""
    return RunLog(
        epochs=np.arange(1, n_epochs + 1, dtype=np.int64),
        prices=np.zeros(n_epochs, dtype=np.float64),
        server_utilities=np.zeros(n_epochs, dtype=np.float64),
        rewards=np.zeros(n_epochs, dtype=np.float64),
        aux_losses=np.zeros(n_epochs, dtype=np.float64),
    )


def atomic_write_text(path, text):
    """Write text then atomically move it into place."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def format_float(x):
    """Shortest exact decimal form; round-trips bit-for-bit via float()."""
    return repr(float(x))


def run_csv_text(log):
    lines = [",".join(RUN_COLUMNS)]
    for i in range(len(log)):
        lines.append(",".join((
            str(int(log.epochs[i])),
            format_float(log.prices[i]),
            format_float(log.server_utilities[i]),
            format_float(log.rewards[i]),
        )))
    return "\n".join(lines) + "\n"


def write_run_csv(path, log):
    atomic_write_text(path, run_csv_text(log))


def read_run_csv(path):
    """Parse a run CSV back into a RunLog (aux losses are not persisted)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if tuple(header.split(",")) != RUN_COLUMNS:
            raise ValueError(f"unexpected run CSV header: {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if any(len(r) != len(RUN_COLUMNS) for r in rows):
        raise ValueError("malformed run CSV row")
    return RunLog(
        epochs=np.array([int(r[0]) for r in rows], dtype=np.int64),
        prices=np.array([float(r[1]) for r in rows], dtype=np.float64),
        server_utilities=np.array([float(r[2]) for r in rows], dtype=np.float64),
        rewards=np.array([float(r[3]) for r in rows], dtype=np.float64),
    )
