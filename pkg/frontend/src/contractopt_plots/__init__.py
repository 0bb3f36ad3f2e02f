"""Figure generation for contractopt benchmark CSVs."""

from .plots import (
    DEFAULT_METRICS,
    FigureSpec,
    PlotInputError,
    Series,
    plot_sweep,
    read_trace,
    render_metric_figure,
    render_sweep_figures,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_METRICS",
    "FigureSpec",
    "PlotInputError",
    "Series",
    "plot_sweep",
    "read_trace",
    "render_metric_figure",
    "render_sweep_figures",
]
