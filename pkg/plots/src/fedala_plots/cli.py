"""Command-line entry point: render one figure from run outputs."""
from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

from .metrics_io import PlotError
from .plots import PLOT_KINDS, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedala-plots",
        description="Render figures from simulator run outputs (metrics.csv / report.json).",
    )
    parser.add_argument("--input", action="append", required=True, metavar="METRICS_CSV",
                        help="path to a run's metrics.csv; repeat the flag to compare runs")
    parser.add_argument("--output", required=True, metavar="IMAGE",
                        help="image file to write (format from the extension, e.g. .png)")
    parser.add_argument("--kind", required=True, choices=PLOT_KINDS,
                        help="which figure to render")
    parser.add_argument("--stride", type=int, default=1,
                        help="marker subsampling: one dot every STRIDE rounds (default: 1)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(inputs=tuple(args.input), kind=args.kind,
                        output=args.output, rounds_stride=args.stride)
        out = render(spec)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
