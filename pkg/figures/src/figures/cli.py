"""Command-line entry point: render both chart types from a results directory.

Reads every ``run_<solver>_seed<N>.csv`` under ``--runs`` plus the summary
CSV, writes ``curves.png`` and ``bars.png`` into ``--out``. Any failure
exits nonzero with a one-line diagnostic on stderr.
"""

import argparse
import glob
import os
import sys

from .charts import ChartSpec, plot_bars, plot_curves


def build_parser():
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render utility curves and summary bars from solver "
                    "run CSVs.",
    )
    parser.add_argument("--runs", required=True, metavar="DIR",
                        help="directory holding run_<solver>_seed<N>.csv files")
    parser.add_argument("--summary", metavar="FILE",
                        help="summary CSV (defaults to RUNS/summary.csv)")
    parser.add_argument("--out", required=True, metavar="DIR",
                        help="directory to write curves.png and bars.png")
    parser.add_argument("--smooth", type=int, default=1, metavar="N",
                        help="trailing moving-average window in epochs")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run_csvs = sorted(glob.glob(os.path.join(args.runs,
                                                 "run_*_seed*.csv")))
        if not run_csvs:
            raise ValueError(f"no run CSVs found in {args.runs}")
        summary = args.summary or os.path.join(args.runs, "summary.csv")
        spec = ChartSpec(
            run_csvs=tuple(run_csvs),
            summary_csv=summary,
            curves_path=os.path.join(args.out, "curves.png"),
            bars_path=os.path.join(args.out, "bars.png"),
            smoothing=args.smooth,
        )
        curves = plot_curves(spec)
        bars = plot_bars(spec)
        print(f"wrote {curves.path} ({curves.n_traces} traces)")
        print(f"wrote {bars.path} ({bars.n_bars} bars)")
        return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
