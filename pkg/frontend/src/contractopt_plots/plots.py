"""Render benchmark-style metric figures from solver trace CSVs.

The input schema is the trace CSV written by the solver harness
(columns ``step,u1,u2,err_a,err_t,gap_u1,gap_u2,...``); one curve is drawn
per input file, labeled from the file's sweep directory.  Output is
deterministic: embedded timestamps are suppressed so identical inputs give
identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

DEFAULT_METRICS = ("err_a", "err_t", "gap_u1", "gap_u2")


class PlotInputError(ValueError):
    """Bad or empty input data; the message names the offending piece."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: which CSVs, which metric columns, where to write."""

    csv_paths: tuple[Path, ...]
    metrics: tuple[str, ...] = DEFAULT_METRICS
    out_dir: Path = Path("figures")
    image_format: str = "pdf"
    x_column: str = "step"
    log_x: bool = False


@dataclass
class Series:
    label: str
    steps: list[float]
    values: dict[str, list[float]] = field(default_factory=dict)


def _label_for(path: Path) -> str:
    path = Path(path)
    if path.stem == "trace":
        return path.parent.name
    return path.stem


def read_trace(path: Path, metrics: tuple[str, ...], x_column: str = "step") -> Series:
    """Load one trace CSV, keeping rows where the metric is present."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [m for m in (x_column, *metrics) if m not in header]
        if missing:
            raise PlotInputError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise PlotInputError(f"{path}: no data rows")
    series = Series(label=_label_for(path), steps=[float(r[x_column]) for r in rows])
    for metric in metrics:
        series.values[metric] = [
            float(r[metric]) if r[metric] != "" else float("nan") for r in rows
        ]
    return series


def render_metric_figure(
    all_series: list[Series], metric: str, log_x: bool = False
) -> plt.Figure:
    """One panel: the metric against training step, one curve per series."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    positive = True
    for series in all_series:
        ys = series.values[metric]
        ax.plot(series.steps, ys, label=series.label, linewidth=1.4)
        positive = positive and all(y > 0 for y in ys if y == y)
    if positive:
        ax.set_yscale("log")
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel(metric)
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    return fig


def render_sweep_figures(spec: FigureSpec) -> dict[str, plt.Figure]:
    """All requested metric panels, keyed by metric name."""
    if not spec.csv_paths:
        raise PlotInputError("no input CSVs given")
    all_series = [read_trace(p, spec.metrics, spec.x_column) for p in spec.csv_paths]
    return {
        metric: render_metric_figure(all_series, metric, spec.log_x)
        for metric in spec.metrics
    }


def plot_sweep(spec: FigureSpec) -> list[Path]:
    """Render and write one image per metric; returns the written paths."""
    figures = render_sweep_figures(spec)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric, fig in figures.items():
        path = out_dir / f"{metric}.{spec.image_format}"
        # drop creation timestamps so re-renders are byte-identical
        fig.savefig(path, metadata=_stable_metadata(spec.image_format))
        plt.close(fig)
        written.append(path)
    return written


def _stable_metadata(image_format: str) -> dict:
    if image_format == "pdf":
        return {"CreationDate": None}
    if image_format == "png":
        return {"Software": None}
    return {}
