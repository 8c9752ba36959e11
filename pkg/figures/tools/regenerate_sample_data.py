"""Rebuild the committed sample CSVs and chart references under tests/data.

The CSVs come from the default experiment of the edgemarket CLI (invoked as
a subprocess so this package only ever touches the file contract). The
reference JSONs freeze each chart's structure (trace/bar count, axis
ranges, labels) for the regression tests; the PNGs are kept for eyeballing.
Training is deterministic, so reruns reproduce identical CSV bytes.
"""

import json
import os
import subprocess
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, os.pardir, "tests", "data")


def main():
    sys.path.insert(0, os.path.join(HERE, os.pardir, "src"))
    from figures import ChartSpec, plot_bars, plot_curves

    os.makedirs(DATA, exist_ok=True)
    subprocess.run(["edgemarket", "run", "--out", DATA], check=True)
    summary_txt = os.path.join(DATA, "summary.txt")
    if os.path.exists(summary_txt):
        os.remove(summary_txt)

    run_csvs = sorted(
        os.path.join(DATA, name) for name in os.listdir(DATA)
        if name.startswith("run_") and name.endswith(".csv"))
    spec = ChartSpec(
        run_csvs=run_csvs,
        summary_csv=os.path.join(DATA, "summary.csv"),
        curves_path=os.path.join(DATA, "reference_curves.png"),
        bars_path=os.path.join(DATA, "reference_bars.png"),
        smoothing=1,
    )
    curves = plot_curves(spec)
    bars = plot_bars(spec)

    with open(os.path.join(DATA, "reference_curves.json"), "w",
              encoding="utf-8") as fh:
        json.dump({
            "smoothing": spec.smoothing,
            "n_traces": curves.n_traces,
            "xlim": list(curves.xlim),
            "ylim": list(curves.ylim),
            "labels": list(curves.labels),
        }, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(DATA, "reference_bars.json"), "w",
              encoding="utf-8") as fh:
        json.dump({
            "n_bars": bars.n_bars,
            "xlim": list(bars.xlim),
            "ylim": list(bars.ylim),
            "solvers": list(bars.solvers),
        }, fh, indent=2)
        fh.write("\n")
    print(f"sample data and references rebuilt under {os.path.normpath(DATA)}")


if __name__ == "__main__":
    main()
