import json

import matplotlib.pyplot as plt
import pytest
from matplotlib.container import BarContainer

from conftest import synthetic_metrics, write_rows
from fedala_plots import (
    KIND_ALA_TRACE,
    KIND_COMPARISON,
    KIND_CONVERGENCE,
    CsvSchemaError,
    PlotError,
    PlotSpec,
    build_ala_trace,
    build_comparison,
    build_convergence,
    plot_ala_trace,
    plot_comparison,
    plot_convergence,
)


def spec_for(paths, kind, output, stride=1):
    return PlotSpec(inputs=tuple(str(p) for p in paths), kind=kind,
                    output=str(output), rounds_stride=stride)


def test_plot_spec_validation():
    with pytest.raises(PlotError, match="kind"):
        PlotSpec(inputs=("m.csv",), kind="pie", output="o.png")
    with pytest.raises(PlotError, match="at least one"):
        PlotSpec(inputs=(), kind=KIND_CONVERGENCE, output="o.png")
    with pytest.raises(PlotError, match="stride"):
        PlotSpec(inputs=("m.csv",), kind=KIND_CONVERGENCE, output="o.png", rounds_stride=0)


def test_convergence_structure_and_marker_count(tmp_path):
    path = synthetic_metrics(tmp_path / "metrics.csv", rounds=10)
    fig = build_convergence(spec_for([path], KIND_CONVERGENCE, tmp_path / "fig.png", stride=1))
    try:
        ax = fig.axes[0]
        assert len(ax.lines) == 2
        for line in ax.lines:
            xdata = list(line.get_xdata())
            assert xdata == list(range(1, 11))
            stride = line.get_markevery()
            assert stride == 1
            assert len(xdata[::stride]) == 10  # stride 1 on 10 rounds: a dot per round
        assert [line.get_label() for line in ax.lines] == [
            "initialized local models", "trained local models",
        ]
        assert ax.get_legend() is not None
        assert ax.get_xlabel() == "round"
        assert "loss" in ax.get_ylabel()
        assert "demo" in ax.get_title()
    finally:
        plt.close(fig)


def test_convergence_stride_subsamples_markers(tmp_path):
    path = synthetic_metrics(tmp_path / "metrics.csv", rounds=10)
    fig = build_convergence(spec_for([path], KIND_CONVERGENCE, tmp_path / "fig.png", stride=3))
    try:
        for line in fig.axes[0].lines:
            stride = line.get_markevery()
            assert stride == 3
            assert len(list(line.get_xdata())[::stride]) == 4  # rounds 1, 4, 7, 10
    finally:
        plt.close(fig)


def test_convergence_series_are_per_round_means(tmp_path):
    path = synthetic_metrics(tmp_path / "metrics.csv", rounds=4, clients=2)
    fig = build_convergence(spec_for([path], KIND_CONVERGENCE, tmp_path / "fig.png"))
    try:
        init_line, trained_line = fig.axes[0].lines
        want_init = [2.0 / t + 0.025 for t in range(1, 5)]
        assert list(init_line.get_ydata()) == pytest.approx(want_init)
        want_trained = [0.8 * (2.0 / t) + 0.02 for t in range(1, 5)]
        assert list(trained_line.get_ydata()) == pytest.approx(want_trained)
    finally:
        plt.close(fig)


def test_convergence_writes_and_overwrites(tmp_path):
    path = synthetic_metrics(tmp_path / "metrics.csv")
    out = tmp_path / "figs" / "conv.png"
    spec = spec_for([path], KIND_CONVERGENCE, out)
    assert plot_convergence(spec) == out
    assert out.stat().st_size > 0
    assert plot_convergence(spec) == out  # rerun overwrites in place
    assert out.stat().st_size > 0


def test_convergence_rejects_header_only_csv(tmp_path):
    path = write_rows(tmp_path / "metrics.csv", [])
    with pytest.raises(PlotError, match="no init/trained"):
        build_convergence(spec_for([path], KIND_CONVERGENCE, tmp_path / "fig.png"))


def test_convergence_rejects_empty_file(tmp_path):
    path = tmp_path / "metrics.csv"
    path.write_text("")
    with pytest.raises(CsvSchemaError):
        build_convergence(spec_for([path], KIND_CONVERGENCE, tmp_path / "fig.png"))


def test_convergence_takes_exactly_one_input(tmp_path):
    a = synthetic_metrics(tmp_path / "a.csv")
    b = synthetic_metrics(tmp_path / "b.csv")
    with pytest.raises(PlotError, match="exactly one"):
        build_convergence(spec_for([a, b], KIND_CONVERGENCE, tmp_path / "fig.png"))


def test_convergence_reference_run(fedala_run):
    """Late in training the trained-model series sits at or below the
    init-model series, and the title carries run provenance."""
    spec = spec_for([fedala_run / "metrics.csv"], KIND_CONVERGENCE, fedala_run / "conv.png")
    fig = build_convergence(spec)
    try:
        ax = fig.axes[0]
        init_line, trained_line = ax.lines
        init_y = list(init_line.get_ydata())
        trained_y = list(trained_line.get_ydata())
        late = len(init_y) // 2
        for g_init, g_trained in zip(init_y[late:], trained_y[late:]):
            assert g_trained <= g_init + 1e-12
        assert "plots-ala" in ax.get_title()
        assert "seed 1" in ax.get_title()
    finally:
        plt.close(fig)


def test_comparison_structure(fedavg_run, fedala_run, tmp_path):
    spec = spec_for([fedavg_run / "metrics.csv", fedala_run / "metrics.csv"],
                    KIND_COMPARISON, tmp_path / "cmp.png")
    fig = build_comparison(spec)
    try:
        ax = fig.axes[0]
        bars = next(c for c in ax.containers if isinstance(c, BarContainer))
        assert len(bars.patches) == 2
        assert bars.errorbar is not None  # std whiskers
        reports = [json.loads((d / "report.json").read_text())
                   for d in (fedavg_run, fedala_run)]
        heights = [p.get_height() for p in bars.patches]
        assert heights == pytest.approx(
            [r["aggregate"]["pfl_accuracy_mean"] for r in reports]
        )
        assert [t.get_text() for t in ax.get_xticklabels()] == ["fedavg", "fedala"]
        title = ax.get_title()
        assert "plots-avg" in title and "plots-ala" in title and "seed 1" in title
        assert "accuracy" in ax.get_ylabel()
    finally:
        plt.close(fig)
    out = plot_comparison(spec)
    assert out.stat().st_size > 0


def test_comparison_requires_two_runs(fedala_run, tmp_path):
    with pytest.raises(PlotError, match="at least two"):
        build_comparison(spec_for([fedala_run / "metrics.csv"],
                                  KIND_COMPARISON, tmp_path / "cmp.png"))


def test_comparison_requires_reports(tmp_path):
    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    a_dir.mkdir()
    b_dir.mkdir()
    a = synthetic_metrics(a_dir / "metrics.csv")
    b = synthetic_metrics(b_dir / "metrics.csv")
    with pytest.raises(PlotError, match=r"report\.json"):
        build_comparison(spec_for([a, b], KIND_COMPARISON, tmp_path / "cmp.png"))


def test_comparison_falls_back_to_run_names_on_duplicate_strategy(fedavg_run, tmp_path):
    other = tmp_path / "other"
    other.mkdir()
    metrics = (fedavg_run / "metrics.csv").read_text()
    (other / "metrics.csv").write_text(metrics)
    report = json.loads((fedavg_run / "report.json").read_text())
    report["run_name"] = "plots-avg-b"
    (other / "report.json").write_text(json.dumps(report))
    spec = spec_for([fedavg_run / "metrics.csv", other / "metrics.csv"],
                    KIND_COMPARISON, tmp_path / "cmp.png")
    fig = build_comparison(spec)
    try:
        labels = [t.get_text() for t in fig.axes[0].get_xticklabels()]
        assert labels == ["plots-avg", "plots-avg-b"]
    finally:
        plt.close(fig)


def test_ala_trace_structure(fedala_run, tmp_path):
    spec = spec_for([fedala_run / "metrics.csv"], KIND_ALA_TRACE, tmp_path / "trace.png")
    fig = build_ala_trace(spec)
    try:
        assert len(fig.axes) == 2  # twin axes: epochs left, drift right
        ax_epochs, ax_drift = fig.axes
        epochs_line = ax_epochs.lines[0]
        drift_line = ax_drift.lines[0]
        assert list(epochs_line.get_xdata()) == list(range(1, 11))
        epochs = list(epochs_line.get_ydata())
        drift = list(drift_line.get_ydata())
        assert epochs[0] == 0.0 and drift[0] == 0.0  # warm-up round: nothing learned yet
        assert epochs[1] >= 6.0  # first active round trains weights to convergence
        assert max(epochs[2:]) <= 1.0  # one epoch per round afterwards
        assert drift[1] == max(drift)
        assert drift[1] > 2.0 * max(drift[2:])  # drift spikes at the first active round
        assert "ala_epochs" in ax_epochs.get_ylabel()
        assert "ala_drift" in ax_drift.get_ylabel()
        assert "plots-ala" in ax_epochs.get_title()
    finally:
        plt.close(fig)
    out = plot_ala_trace(spec)
    assert out.stat().st_size > 0


def test_ala_trace_requires_telemetry(fedavg_run, tmp_path):
    spec = spec_for([fedavg_run / "metrics.csv"], KIND_ALA_TRACE, tmp_path / "trace.png")
    with pytest.raises(PlotError, match="telemetry"):
        build_ala_trace(spec)


def test_ala_trace_rejects_synthetic_without_telemetry(tmp_path):
    path = synthetic_metrics(tmp_path / "metrics.csv")
    with pytest.raises(PlotError, match="telemetry"):
        build_ala_trace(spec_for([path], KIND_ALA_TRACE, tmp_path / "trace.png"))
