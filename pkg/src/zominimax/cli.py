"""Command-line interface.

Subcommands:
  run        execute an experiment described by a JSON config file
  reproduce  run a pinned benchmark experiment set and check its thresholds
  plot       render a metric from aggregate CSVs to SVG

Exit codes: 0 success, 1 run error, 2 reproduction-threshold failure.
The environment variable ZO_MINIMAX_THREADS caps concurrent seeds.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zo-minimax",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the config file")
    p_run.add_argument("--seed-offset", type=int, default=0,
                       help="added to every seed in the config")

    p_rep = sub.add_parser("reproduce", help="run a pinned benchmark experiment")
    p_rep.add_argument("experiment", choices=["wgan", "robust-poly"])
    p_rep.add_argument("--out", default="reproduce-out", help="output directory")
    p_rep.add_argument("--seed-offset", type=int, default=0)
    p_rep.add_argument("--max-iter", type=int, default=None,
                       help="override the pinned iteration counts")

    p_plot = sub.add_parser("plot", help="plot a metric from aggregate CSVs")
    p_plot.add_argument("--aggregate", action="append", required=True,
                        metavar="[LABEL=]FILE",
                        help="aggregate CSV; repeat for several series")
    p_plot.add_argument("--metric", required=True)
    p_plot.add_argument("--x", choices=["iteration", "queries"], default="iteration")
    p_plot.add_argument("--logy", action="store_true")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = harness.ExperimentConfig.from_json_file(args.config)
            if args.seed_offset:
                config.seeds = [s + args.seed_offset for s in config.seeds]
            result = harness.run_experiment(config)
            print(f"wrote {len(result.trace_paths)} trace(s) and "
                  f"{result.aggregate_path}")
            return 0
        if args.command == "reproduce":
            return harness.reproduce(args.experiment, out_dir=args.out,
                                     seed_offset=args.seed_offset,
                                     max_iter=args.max_iter)
        if args.command == "plot":
            series = []
            for item in args.aggregate:
                label, _, path = item.rpartition("=")
                series.append((label or path, path))
            out = harness.emit_plot(series, args.metric, x_axis=args.x,
                                    logy=args.logy, out=args.out)
            print(f"wrote {out}")
            return 0
        raise AssertionError(args.command)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
