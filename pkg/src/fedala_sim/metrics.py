"""Flat CSV metrics stream for experiment runs.

One row per (client, phase) per round plus one server row per round. The
header is fixed; floats are written with nine significant digits so reruns
of a deterministic experiment produce byte-identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import CsvParseError, CsvSchemaError

METRICS_HEADER = (
    "run_name",
    "repeat",
    "round",
    "client_id",
    "phase",
    "loss",
    "accuracy",
    "comm_params",
    "ala_epochs",
    "ala_drift",
    "wall_ms",
)

ALA_TRACE_HEADER = (
    "run_name",
    "repeat",
    "round",
    "client_id",
    "epochs",
    "final_loss",
    "drift",
    "w_mean",
    "w_clip_frac",
)

PHASE_INIT = "init"
PHASE_TRAINED = "trained"
PHASE_SERVER = "server"

PHASES = (PHASE_INIT, PHASE_TRAINED, PHASE_SERVER)

SERVER_CLIENT_ID = -1


def fmt_float(x: float) -> str:
    return "{:.9g}".format(float(x))


@dataclass
class MetricsRecord:
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

    def to_row(self) -> list[str]:
        return [
            self.run_name,
            str(self.repeat),
            str(self.round),
            str(self.client_id),
            self.phase,
            fmt_float(self.loss),
            fmt_float(self.accuracy),
            str(self.comm_params),
            str(self.ala_epochs),
            fmt_float(self.ala_drift),
            str(self.wall_ms),
        ]


@dataclass
class AlaTraceRecord:
    run_name: str
    repeat: int
    round: int
    client_id: int
    epochs: int
    final_loss: float
    drift: float
    w_mean: float
    w_clip_frac: float

    def to_row(self) -> list[str]:
        return [
            self.run_name,
            str(self.repeat),
            str(self.round),
            str(self.client_id),
            str(self.epochs),
            fmt_float(self.final_loss),
            fmt_float(self.drift),
            fmt_float(self.w_mean),
            fmt_float(self.w_clip_frac),
        ]


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_metrics_csv(path: str | Path, records: list[MetricsRecord]) -> None:
    _write_csv(Path(path), METRICS_HEADER, (r.to_row() for r in records))


def write_ala_trace_csv(path: str | Path, records: list[AlaTraceRecord]) -> None:
    _write_csv(Path(path), ALA_TRACE_HEADER, (r.to_row() for r in records))


def read_metrics_csv(path: str | Path) -> list[MetricsRecord]:
    """Parse a metrics file back into records, validating header and types."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvSchemaError(f"{path}: empty metrics file") from None
        if tuple(header) != METRICS_HEADER:
            raise CsvSchemaError(
                f"{path}: bad header {header!r}, expected {list(METRICS_HEADER)!r}"
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(METRICS_HEADER):
                raise CsvParseError(f"{path}:{lineno}: expected {len(METRICS_HEADER)} fields, got {len(row)}")
            try:
                rec = MetricsRecord(
                    run_name=row[0],
                    repeat=int(row[1]),
                    round=int(row[2]),
                    client_id=int(row[3]),
                    phase=row[4],
                    loss=float(row[5]),
                    accuracy=float(row[6]),
                    comm_params=int(row[7]),
                    ala_epochs=int(row[8]),
                    ala_drift=float(row[9]),
                    wall_ms=int(row[10]),
                )
            except ValueError as exc:
                raise CsvParseError(f"{path}:{lineno}: {exc}") from exc
            if rec.phase not in PHASES:
                raise CsvParseError(f"{path}:{lineno}: unknown phase {rec.phase!r}")
            records.append(rec)
    return records
