"""Offline figure generation from fedala-sim run outputs.

Consumes only the simulator's files (metrics.csv, report.json); renders
convergence curves, strategy comparison bars, and ALA telemetry traces.
"""

from .metrics_io import (
    METRICS_COLUMNS,
    PHASE_INIT,
    PHASE_SERVER,
    PHASE_TRAINED,
    SERVER_CLIENT_ID,
    CsvParseError,
    CsvSchemaError,
    MetricsRow,
    PlotError,
    read_metrics,
    read_report,
    report_seed,
    try_read_report,
)
from .plots import (
    KIND_ALA_TRACE,
    KIND_COMPARISON,
    KIND_CONVERGENCE,
    PLOT_KINDS,
    PlotSpec,
    build_ala_trace,
    build_comparison,
    build_convergence,
    plot_ala_trace,
    plot_comparison,
    plot_convergence,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "METRICS_COLUMNS",
    "PHASE_INIT",
    "PHASE_SERVER",
    "PHASE_TRAINED",
    "SERVER_CLIENT_ID",
    "CsvParseError",
    "CsvSchemaError",
    "MetricsRow",
    "PlotError",
    "read_metrics",
    "read_report",
    "report_seed",
    "try_read_report",
    "KIND_ALA_TRACE",
    "KIND_COMPARISON",
    "KIND_CONVERGENCE",
    "PLOT_KINDS",
    "PlotSpec",
    "build_ala_trace",
    "build_comparison",
    "build_convergence",
    "plot_ala_trace",
    "plot_comparison",
    "plot_convergence",
    "render",
    "__version__",
]
