"""Command-line entry point: run experiments from a config file and compare
finished runs side by side.

`run` writes metrics.csv (plus ala_trace.csv for ALA strategies) and
report.json into the output directory; `compare` tabulates the report.json
files of one or more run directories into comparison.csv.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import VERSION
from .config import ExperimentConfig, config_echo, fl_for_repeat, materialize_data, parse_config
from .errors import ConfigError, SimError
from .metrics import write_ala_trace_csv, write_metrics_csv
from .runtime import run_experiment

COMPARISON_HEADER = (
    "run_name",
    "strategy",
    "pfl_acc_mean",
    "pfl_acc_std",
    "traditional_acc_mean",
    "traditional_acc_std",
    "total_comm_params",
    "wall_ms",
)


def _mean_std(values: list[float]) -> tuple[float, float]:
    if len(values) == 1:
        return values[0], 0.0
    return statistics.fmean(values), statistics.stdev(values)


def _strategy_label(cfg: ExperimentConfig) -> str:
    label = cfg.fl.strategy.kind
    if cfg.fl.strategy.attach_ala:
        label += "+ala"
    return label


def _write_error_report(out_dir: Path | None, run_name: str, echo: dict | None, message: str) -> None:
    if out_dir is None:
        return
    doc = {"run_name": run_name, "version": VERSION, "error": message}
    if echo is not None:
        doc["config"] = echo
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(doc, indent=2) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    out_dir = Path(args.output_dir) if args.output_dir else None
    echo = None
    run_name = "?"
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be >= 0")
            cfg = replace(cfg, seed=args.seed)
        if args.repeats is not None:
            if args.repeats < 1:
                raise ConfigError("--repeats must be >= 1")
            cfg = replace(cfg, repeats=args.repeats)
        run_name = cfg.run_name
        if out_dir is None:
            out_dir = Path(cfg.output_dir) if cfg.output_dir else Path("runs") / cfg.run_name
        echo = config_echo(cfg)

        t0 = time.perf_counter()
        reports = []
        per_repeat_wall = []
        for rep in range(cfg.repeats):
            r0 = time.perf_counter()
            splits, arch = materialize_data(cfg, rep)
            fl = fl_for_repeat(cfg, rep)
            reports.append(run_experiment(fl, splits, arch, run_name=cfg.run_name, repeat=rep))
            per_repeat_wall.append((time.perf_counter() - r0) * 1000.0)
        wall_ms = (time.perf_counter() - t0) * 1000.0
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error_report(out_dir, run_name, echo, str(exc))
        return 1

    records = [rec for report in reports for rec in report.records]
    trace = [rec for report in reports for rec in report.ala_trace]
    out_dir.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out_dir / "metrics.csv", records)
    if trace:
        write_ala_trace_csv(out_dir / "ala_trace.csv", trace)

    pfl_mean, pfl_std = _mean_std([r.pfl_accuracy for r in reports])
    trad_mean, trad_std = _mean_std([r.traditional_accuracy for r in reports])
    loss_mean, loss_std = _mean_std([r.final_server_loss for r in reports])
    doc = {
        "run_name": cfg.run_name,
        "version": VERSION,
        "strategy": _strategy_label(cfg),
        "config": echo,
        "num_params": reports[0].num_params,
        "repeats": cfg.repeats,
        "per_repeat": [
            {
                "repeat": r.repeat,
                "pfl_accuracy": r.pfl_accuracy,
                "traditional_accuracy": r.traditional_accuracy,
                "final_server_loss": r.final_server_loss,
                "final_server_acc": r.final_server_acc,
                "total_comm_params": r.total_comm_params,
                "wall_ms": per_repeat_wall[i],
            }
            for i, r in enumerate(reports)
        ],
        "aggregate": {
            "pfl_accuracy_mean": pfl_mean,
            "pfl_accuracy_std": pfl_std,
            "traditional_accuracy_mean": trad_mean,
            "traditional_accuracy_std": trad_std,
            "final_server_loss_mean": loss_mean,
            "final_server_loss_std": loss_std,
            "total_comm_params": sum(r.total_comm_params for r in reports),
            "wall_ms": wall_ms,
        },
    }
    (out_dir / "report.json").write_text(json.dumps(doc, indent=2) + "\n")

    print(f"{cfg.run_name}: {cfg.repeats} repeat(s), {reports[0].rounds} rounds, "
          f"{reports[0].num_clients} clients [{_strategy_label(cfg)}]")
    print(f"  avg best local accuracy: {pfl_mean:.4f} +/- {pfl_std:.4f}")
    print(f"  best global accuracy:    {trad_mean:.4f} +/- {trad_std:.4f}")
    print(f"  wrote {out_dir / 'metrics.csv'} and {out_dir / 'report.json'}")
    return 0


def _load_report(dir_path: Path) -> dict:
    report_path = dir_path / "report.json"
    if not report_path.is_file():
        raise ConfigError(f"missing report.json in {dir_path}")
    try:
        doc = json.loads(report_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corrupt report {report_path}: {exc}") from exc
    if "error" in doc:
        raise ConfigError(f"{report_path} is from a failed run: {doc['error']}")
    for key in ("run_name", "strategy", "aggregate"):
        if key not in doc:
            raise ConfigError(f"corrupt report {report_path}: missing key {key!r}")
    return doc


def cmd_compare(args: argparse.Namespace) -> int:
    rows = []
    try:
        for d in args.dirs:
            doc = _load_report(Path(d))
            agg = doc["aggregate"]
            rows.append([
                doc["run_name"],
                doc["strategy"],
                f"{agg['pfl_accuracy_mean']:.6f}",
                f"{agg['pfl_accuracy_std']:.6f}",
                f"{agg['traditional_accuracy_mean']:.6f}",
                f"{agg['traditional_accuracy_std']:.6f}",
                str(agg["total_comm_params"]),
                f"{agg['wall_ms']:.1f}",
            ])
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"error: corrupt report: missing key {exc}", file=sys.stderr)
        return 1

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "comparison.csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARISON_HEADER)
        writer.writerows(rows)

    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(COMPARISON_HEADER)]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(COMPARISON_HEADER)))
    for row in rows:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    print(f"wrote {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedala-sim",
        description="Deterministic federated-learning simulator with adaptive local aggregation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config", help="path to the experiment config (YAML)")
    p_run.add_argument("--output-dir", help="where to write metrics.csv and report.json "
                                            "(default: config output_dir, else runs/<run_name>)")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--repeats", type=int, help="override the config repeat count")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="tabulate finished runs side by side")
    p_cmp.add_argument("dirs", nargs="+", help="run directories containing report.json")
    p_cmp.add_argument("--output-dir", default=".", help="where to write comparison.csv (default: .)")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
