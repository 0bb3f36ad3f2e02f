"""Figure generation against the golden sweep CSVs."""

import csv
import hashlib
from pathlib import Path

import pytest

from contractopt_plots import (
    DEFAULT_METRICS,
    FigureSpec,
    PlotInputError,
    plot_sweep,
    read_trace,
    render_sweep_figures,
)
from contractopt_plots.cli import main

DATA = Path(__file__).parent / "data" / "golden_sweep"
TRACES = tuple(sorted(DATA.glob("r=*/trace.csv")))


def golden_column(path: Path, column: str) -> list[float]:
    with path.open(newline="") as fh:
        return [float(row[column]) for row in csv.DictReader(fh)]


def test_golden_data_present():
    assert len(TRACES) == 3


def test_four_nonempty_figures_from_golden_sweep(tmp_path):
    spec = FigureSpec(csv_paths=TRACES, out_dir=tmp_path)
    written = plot_sweep(spec)
    assert len(written) == 4
    for path in written:
        assert path.exists() and path.stat().st_size > 0
    assert {p.stem for p in written} == set(DEFAULT_METRICS)


def test_extracted_series_equal_csv_columns_exactly():
    spec = FigureSpec(csv_paths=TRACES)
    figures = render_sweep_figures(spec)
    for metric, fig in figures.items():
        lines = fig.axes[0].get_lines()
        assert len(lines) == len(TRACES)
        for line, trace in zip(lines, TRACES):
            assert list(line.get_xdata()) == golden_column(trace, "step")
            assert list(line.get_ydata()) == golden_column(trace, metric)
            assert line.get_label() == trace.parent.name


def test_missing_column_names_the_column():
    with pytest.raises(PlotInputError, match="nonexistent"):
        read_trace(TRACES[0], ("nonexistent",))


def test_header_only_csv_is_an_error(tmp_path):
    empty = tmp_path / "trace.csv"
    empty.write_text("step,err_a,err_t,gap_u1,gap_u2\n")
    with pytest.raises(PlotInputError, match="no data rows"):
        read_trace(empty, ("err_a",))


def test_no_inputs_is_an_error(tmp_path):
    with pytest.raises(PlotInputError, match="no input"):
        plot_sweep(FigureSpec(csv_paths=(), out_dir=tmp_path))


def test_inputs_are_left_untouched(tmp_path):
    before = [hashlib.sha256(p.read_bytes()).hexdigest() for p in TRACES]
    plot_sweep(FigureSpec(csv_paths=TRACES, out_dir=tmp_path))
    after = [hashlib.sha256(p.read_bytes()).hexdigest() for p in TRACES]
    assert before == after


def test_rendering_is_deterministic(tmp_path):
    spec_a = FigureSpec(csv_paths=TRACES, out_dir=tmp_path / "a")
    spec_b = FigureSpec(csv_paths=TRACES, out_dir=tmp_path / "b")
    for path_a, path_b in zip(plot_sweep(spec_a), plot_sweep(spec_b)):
        assert path_a.read_bytes() == path_b.read_bytes()


def test_log_scale_used_when_all_values_positive():
    figures = render_sweep_figures(FigureSpec(csv_paths=TRACES))
    assert figures["err_t"].axes[0].get_yscale() == "log"


def test_linear_scale_when_values_cross_zero(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("step,err_a\n1,-0.5\n2,0.5\n")
    figures = render_sweep_figures(
        FigureSpec(csv_paths=(path,), metrics=("err_a",))
    )
    assert figures["err_a"].axes[0].get_yscale() == "linear"


class TestCli:
    def test_renders_pngs(self, tmp_path):
        out = tmp_path / "figs"
        code = main([
            "--sweep", *[str(p) for p in TRACES],
            "--out", str(out), "--format", "png",
        ])
        assert code == 0
        assert len(list(out.glob("*.png"))) == 4

    def test_missing_column_exit_code(self, tmp_path, capsys):
        code = main([
            "--sweep", str(TRACES[0]), "--out", str(tmp_path),
            "--metrics", "bogus",
        ])
        assert code == 1
        assert "bogus" in capsys.readouterr().err
