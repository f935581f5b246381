"""Readers for the simulator's run outputs (metrics.csv and report.json).

This package is deliberately decoupled from the simulator: it re-parses the
documented file formats instead of importing the simulator package, and it
never recomputes simulation quantities — it only renders what was logged.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

METRICS_COLUMNS = (
    "run_name", "repeat", "round", "client_id", "phase", "loss",
    "accuracy", "comm_params", "ala_epochs", "ala_drift", "wall_ms",
)
PHASE_INIT = "init"
PHASE_TRAINED = "trained"
PHASE_SERVER = "server"
SERVER_CLIENT_ID = -1

REPORT_FILENAME = "report.json"


class PlotError(Exception):
    """Base class for everything this package raises on purpose."""


class CsvSchemaError(PlotError):
    """The file does not carry the expected metrics.csv header."""


class CsvParseError(PlotError):
    """A metrics.csv data row does not parse; the message carries path:lineno."""


@dataclass(frozen=True)
class MetricsRow:
    run_name: str
    repeat: int
    round: int
    client_id: int
    phase: str
    loss: float
    accuracy: float
    comm_params: int
    ala_epochs: int
    ala_drift: float
    wall_ms: int


def read_metrics(path: str | Path) -> list[MetricsRow]:
    """Parse a metrics.csv, validating the documented schema.

    Raises CsvSchemaError for a missing or wrong header and CsvParseError
    (with path:lineno) for malformed rows. A header-only file yields [].
    """
    path = Path(path)
    rows: list[MetricsRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvSchemaError(f"{path}: empty file (expected the metrics header)") from None
        if tuple(header) != METRICS_COLUMNS:
            missing = [c for c in METRICS_COLUMNS if c not in header]
            extra = [c for c in header if c not in METRICS_COLUMNS]
            detail = []
            if missing:
                detail.append("missing column(s) " + ", ".join(missing))
            if extra:
                detail.append("unexpected column(s) " + ", ".join(extra))
            raise CsvSchemaError(
                f"{path}: bad metrics header: " + ("; ".join(detail) or "columns out of order")
            )
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(METRICS_COLUMNS):
                raise CsvParseError(
                    f"{path}:{lineno}: expected {len(METRICS_COLUMNS)} fields, got {len(raw)}"
                )
            try:
                rows.append(MetricsRow(
                    run_name=raw[0],
                    repeat=int(raw[1]),
                    round=int(raw[2]),
                    client_id=int(raw[3]),
                    phase=raw[4],
                    loss=float(raw[5]),
                    accuracy=float(raw[6]),
                    comm_params=int(raw[7]),
                    ala_epochs=int(raw[8]),
                    ala_drift=float(raw[9]),
                    wall_ms=int(raw[10]),
                ))
            except ValueError as exc:
                raise CsvParseError(f"{path}:{lineno}: {exc}") from exc
    return rows


def read_report(metrics_path: str | Path) -> dict:
    """Load the report.json that lives beside a metrics.csv.

    The report carries the run's logged aggregates (strategy label, accuracy
    mean/std over repeats) and the seed; comparison bars come straight from
    it. Raises PlotError with an explanation when it is missing, corrupt, or
    from a failed run.
    """
    report_path = Path(metrics_path).parent / REPORT_FILENAME
    if not report_path.is_file():
        raise PlotError(
            f"{report_path}: not found; comparison reads the logged aggregates "
            "from the report.json written next to each run's metrics.csv"
        )
    try:
        doc = json.loads(report_path.read_text())
    except json.JSONDecodeError as exc:
        raise PlotError(f"{report_path}: corrupt report: {exc}") from exc
    if "error" in doc:
        raise PlotError(f"{report_path}: is from a failed run: {doc['error']}")
    for key in ("run_name", "strategy", "aggregate"):
        if key not in doc:
            raise PlotError(f"{report_path}: corrupt report: missing key {key!r}")
    return doc


def try_read_report(metrics_path: str | Path) -> dict | None:
    """Like read_report, but returns None instead of raising (title provenance
    is best-effort; a run directory without a readable report is still plottable)."""
    try:
        return read_report(metrics_path)
    except PlotError:
        return None


def report_seed(report: dict | None) -> int | None:
    """The run's seed from the report's config echo, if present."""
    if report is None:
        return None
    config = report.get("config")
    if not isinstance(config, dict):
        return None
    seed = config.get("seed")
    return seed if isinstance(seed, int) else None
