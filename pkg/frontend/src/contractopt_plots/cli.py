"""Command line for batch figure generation from sweep trace CSVs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .plots import DEFAULT_METRICS, FigureSpec, PlotInputError, plot_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contractopt-plot",
        description="Render per-metric figures from solver trace CSVs",
    )
    parser.add_argument(
        "--sweep", nargs="+", required=True, type=Path,
        help="trace CSV files, one curve per file",
    )
    parser.add_argument("--out", required=True, type=Path, help="output directory")
    parser.add_argument("--format", choices=("pdf", "png"), default="pdf")
    parser.add_argument(
        "--metrics", nargs="+", default=list(DEFAULT_METRICS),
        help="metric columns to plot (default: the four benchmark metrics)",
    )
    parser.add_argument("--log-x", action="store_true", help="log-scale the step axis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        csv_paths=tuple(args.sweep),
        metrics=tuple(args.metrics),
        out_dir=args.out,
        image_format=args.format,
        log_x=args.log_x,
    )
    try:
        written = plot_sweep(spec)
    except (PlotInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
