import matplotlib

matplotlib.use("Agg")

import csv
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from fedala_plots.metrics_io import METRICS_COLUMNS

FEDALA_CFG = """\
run_name: plots-ala
seed: 1

data:
  num_classes: 3
  input_dim: 4
  samples_per_class: 30
  partition:
    scheme: pathological
    classes_per_client: 2

model:
  kind: mlp-1-hidden
  hidden_dim: 4

fl:
  num_clients: 3
  rounds: 10
  local_lr: 0.05
  strategy:
    kind: fedala
  ala:
    init_max_epochs: 8
"""

FEDAVG_CFG = """\
run_name: plots-avg
seed: 1
repeats: 2

data:
  num_classes: 3
  input_dim: 4
  samples_per_class: 30
  partition:
    scheme: pathological
    classes_per_client: 2

model:
  kind: mlp-1-hidden
  hidden_dim: 4

fl:
  num_clients: 3
  rounds: 10
  local_lr: 0.05
  strategy:
    kind: fedavg
"""


def sim_command() -> list[str]:
    exe = shutil.which("fedala-sim")
    if exe is not None:
        return [exe]
    return [sys.executable, "-m", "fedala_sim.cli"]


def run_simulator(cfg_text: str, out_dir: Path) -> Path:
    """Produce a real run directory through the simulator CLI."""
    cfg_path = out_dir / "config.yaml"
    cfg_path.write_text(cfg_text)
    proc = subprocess.run(
        sim_command() + ["run", str(cfg_path), "--output-dir", str(out_dir)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, f"simulator run failed:\n{proc.stderr}"
    return out_dir


@pytest.fixture(scope="session")
def fedala_run(tmp_path_factory) -> Path:
    """A small adaptive-aggregation run: metrics.csv, ala_trace.csv, report.json."""
    return run_simulator(FEDALA_CFG, tmp_path_factory.mktemp("fedala-run"))


@pytest.fixture(scope="session")
def fedavg_run(tmp_path_factory) -> Path:
    """A two-repeat baseline run with no aggregation-weight telemetry."""
    return run_simulator(FEDAVG_CFG, tmp_path_factory.mktemp("fedavg-run"))


def write_rows(path: Path, rows: list[list[str]], header=METRICS_COLUMNS) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def synthetic_metrics(path: Path, rounds: int = 10, clients: int = 2) -> Path:
    """Hand-built metrics.csv: losses fall over rounds, trained below init,
    no aggregation-weight telemetry."""
    rows = []
    for t in range(1, rounds + 1):
        for c in range(clients):
            init_loss = 2.0 / t + 0.05 * c
            rows.append(["demo", "0", str(t), str(c), "init",
                         f"{init_loss:.9g}", "0.5", "0", "0", "0", "0"])
            rows.append(["demo", "0", str(t), str(c), "trained",
                         f"{init_loss * 0.8:.9g}", "0.6", "120", "0", "0", "0"])
        rows.append(["demo", "0", str(t), "-1", "server",
                     f"{1.5 / t:.9g}", "0.55", str(120 * clients), "0", "0", "0"])
    return write_rows(path, rows)
