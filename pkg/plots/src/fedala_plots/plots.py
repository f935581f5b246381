"""Figure construction from simulator run outputs.

Three figure kinds, all driven by a PlotSpec:

- convergence: per-round average local train loss of the round-initialized
  models vs. the locally trained models, with markers subsampled every
  ``rounds_stride`` rounds.
- comparison: one accuracy bar per run (mean best local accuracy over
  repeats, std whiskers), labels and values taken from each run's report.
- ala-trace: per-round mean adaptive-aggregation telemetry (weight-learning
  epochs and weight drift) on twin axes.

``build_*`` returns the live Figure (handy for tests and notebooks);
``plot_*`` additionally writes ``spec.output`` and closes the figure.
Inputs are only ever read; rerunning overwrites the output image in place.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib.figure
import matplotlib.pyplot as plt

from . import style
from .metrics_io import (
    PHASE_INIT,
    PHASE_TRAINED,
    SERVER_CLIENT_ID,
    MetricsRow,
    PlotError,
    read_metrics,
    read_report,
    report_seed,
    try_read_report,
)

KIND_CONVERGENCE = "convergence"
KIND_COMPARISON = "comparison"
KIND_ALA_TRACE = "ala-trace"
PLOT_KINDS = (KIND_CONVERGENCE, KIND_COMPARISON, KIND_ALA_TRACE)


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input metrics.csv path(s), figure kind, image path,
    and the marker subsampling stride (one dot every ``rounds_stride`` rounds)."""

    inputs: tuple[str, ...]
    kind: str
    output: str
    rounds_stride: int = 1

    def __post_init__(self) -> None:
        if self.kind not in PLOT_KINDS:
            raise PlotError(
                f"unknown plot kind {self.kind!r}; expected one of: " + ", ".join(PLOT_KINDS)
            )
        if len(self.inputs) == 0:
            raise PlotError("at least one input metrics.csv path is required")
        if self.rounds_stride < 1:
            raise PlotError(f"rounds_stride must be >= 1, got {self.rounds_stride}")


def _single_input(spec: PlotSpec, kind: str) -> Path:
    if len(spec.inputs) != 1:
        raise PlotError(f"{kind} plots take exactly one metrics.csv, got {len(spec.inputs)}")
    return Path(spec.inputs[0])


def _client_rows(rows: list[MetricsRow], phase: str) -> list[MetricsRow]:
    return [r for r in rows if r.phase == phase and r.client_id != SERVER_CLIENT_ID]


def _mean_by_round(rows: list[MetricsRow], value) -> tuple[list[int], list[float]]:
    """Rounds in order plus the per-round mean of value(row) over all rows
    (clients and repeats pool together — the figure shows one averaged series)."""
    acc: dict[int, list[float]] = {}
    for r in rows:
        acc.setdefault(r.round, []).append(float(value(r)))
    rounds = sorted(acc)
    return rounds, [sum(acc[t]) / len(acc[t]) for t in rounds]


def _title(run_name: str, report: dict | None, what: str) -> str:
    seed = report_seed(report)
    if seed is None:
        return f"{run_name} - {what}"
    return f"{run_name} (seed {seed}) - {what}"


def _save(fig: matplotlib.figure.Figure, output: str) -> Path:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=style.DPI, bbox_inches="tight")
    plt.close(fig)
    return out


def build_convergence(spec: PlotSpec) -> matplotlib.figure.Figure:
    path = _single_input(spec, KIND_CONVERGENCE)
    rows = read_metrics(path)
    init_rounds, init_loss = _mean_by_round(_client_rows(rows, PHASE_INIT), lambda r: r.loss)
    trained_rounds, trained_loss = _mean_by_round(_client_rows(rows, PHASE_TRAINED), lambda r: r.loss)
    if not init_rounds or not trained_rounds:
        raise PlotError(f"{path}: no init/trained client rows to plot")

    fig, ax = plt.subplots(figsize=style.FIGSIZE)
    ax.plot(init_rounds, init_loss, color=style.INIT_COLOR, linewidth=style.LINEWIDTH,
            marker=style.MARKER, markersize=style.MARKERSIZE, markevery=spec.rounds_stride,
            label="initialized local models")
    ax.plot(trained_rounds, trained_loss, color=style.TRAINED_COLOR, linewidth=style.LINEWIDTH,
            marker=style.MARKER, markersize=style.MARKERSIZE, markevery=spec.rounds_stride,
            label="trained local models")
    ax.set_xlabel("round")
    ax.set_ylabel("average local train loss")
    ax.legend()
    style.finish_axes(ax)
    ax.set_title(_title(rows[0].run_name, try_read_report(path), "convergence"))
    fig.tight_layout()
    return fig


def plot_convergence(spec: PlotSpec) -> Path:
    return _save(build_convergence(spec), spec.output)


def build_comparison(spec: PlotSpec) -> matplotlib.figure.Figure:
    if len(spec.inputs) < 2:
        raise PlotError(f"comparison takes at least two run metrics.csv paths, got {len(spec.inputs)}")
    names: list[str] = []
    strategies: list[str] = []
    means: list[float] = []
    stds: list[float] = []
    seeds: list[int | None] = []
    for raw in spec.inputs:
        path = Path(raw)
        if not read_metrics(path):
            raise PlotError(f"{path}: no data rows")
        report = read_report(path)
        agg = report["aggregate"]
        try:
            means.append(float(agg["pfl_accuracy_mean"]))
            stds.append(float(agg["pfl_accuracy_std"]))
        except (KeyError, TypeError) as exc:
            raise PlotError(f"{path}: report aggregate is missing accuracy fields: {exc}") from exc
        names.append(str(report["run_name"]))
        strategies.append(str(report["strategy"]))
        seeds.append(report_seed(report))

    # Bars are labeled by strategy; fall back to run names when two runs
    # share a strategy (e.g. an ablation compared against itself).
    labels = strategies if len(set(strategies)) == len(strategies) else names

    fig, ax = plt.subplots(figsize=style.FIGSIZE)
    positions = range(len(labels))
    colors = [style.BAR_COLORS[i % len(style.BAR_COLORS)] for i in positions]
    ax.bar(positions, means, yerr=stds, width=style.BAR_WIDTH, color=colors,
           capsize=style.CAPSIZE)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels)
    ax.set_ylabel("average best local accuracy")
    style.finish_axes(ax)
    provenance = " vs ".join(
        name if seed is None else f"{name} (seed {seed})"
        for name, seed in zip(names, seeds)
    )
    ax.set_title(f"{provenance} - comparison")
    fig.tight_layout()
    return fig


def plot_comparison(spec: PlotSpec) -> Path:
    return _save(build_comparison(spec), spec.output)


def build_ala_trace(spec: PlotSpec) -> matplotlib.figure.Figure:
    path = _single_input(spec, KIND_ALA_TRACE)
    rows = read_metrics(path)
    init_rows = _client_rows(rows, PHASE_INIT)
    if not init_rows:
        raise PlotError(f"{path}: no init-phase client rows to plot")
    if all(r.ala_epochs == 0 and r.ala_drift == 0.0 for r in init_rows):
        raise PlotError(
            f"{path}: no adaptive-aggregation telemetry to plot (ala_epochs and "
            "ala_drift are zero on every row); this run's strategy does not "
            "learn aggregation weights, so there is no trace"
        )
    rounds, epochs = _mean_by_round(init_rows, lambda r: r.ala_epochs)
    _, drift = _mean_by_round(init_rows, lambda r: r.ala_drift)

    fig, ax = plt.subplots(figsize=style.FIGSIZE)
    ax_drift = ax.twinx()
    epochs_line, = ax.plot(rounds, epochs, color=style.EPOCHS_COLOR, linewidth=style.LINEWIDTH,
                           marker=style.MARKER, markersize=style.MARKERSIZE,
                           markevery=spec.rounds_stride, label="mean ala_epochs")
    drift_line, = ax_drift.plot(rounds, drift, color=style.DRIFT_COLOR, linewidth=style.LINEWIDTH,
                                marker=style.MARKER, markersize=style.MARKERSIZE,
                                markevery=spec.rounds_stride, label="mean ala_drift")
    ax.set_xlabel("round")
    ax.set_ylabel("mean ala_epochs", color=style.EPOCHS_COLOR)
    ax_drift.set_ylabel("mean ala_drift", color=style.DRIFT_COLOR)
    ax.legend(handles=[epochs_line, drift_line], loc="upper right")
    style.finish_axes(ax)
    ax.set_title(_title(init_rows[0].run_name, try_read_report(path), "ala trace"))
    fig.tight_layout()
    return fig


def plot_ala_trace(spec: PlotSpec) -> Path:
    return _save(build_ala_trace(spec), spec.output)


_RENDERERS = {
    KIND_CONVERGENCE: plot_convergence,
    KIND_COMPARISON: plot_comparison,
    KIND_ALA_TRACE: plot_ala_trace,
}


def render(spec: PlotSpec) -> Path:
    """Dispatch on spec.kind and write the figure; returns the output path."""
    return _RENDERERS[spec.kind](spec)
