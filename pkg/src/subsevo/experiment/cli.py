"""Command-line interface.

Subcommands: evolve, sweep, bench, train, plot. Exit codes: 0 success,
2 invalid arguments or configuration, 3 data loading failure, 4 runtime
failure. Errors go to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from ..data import IdxFormatError
from ..evolution import load_predictor
from .config import ConfigError, ExperimentConfig, load_config
from .runs import (compare_selection_strategies, run_evolve, run_size_sweep,
                   run_timing_bench, run_train)
from .svg import PlotDataError, emit_plot

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _parse_sizes(text):
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise CliError(EXIT_USAGE, f"--sizes must be a comma-separated "
                                   f"integer list, got {text!r}") from None
    if not sizes:
        raise CliError(EXIT_USAGE, "--sizes is empty")
    if any(a >= b for a, b in zip(sizes, sizes[1:])):
        raise CliError(EXIT_USAGE, f"--sizes must be strictly increasing, "
                                   f"got {text}")
    return sizes


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        return ExperimentConfig()
    if not os.path.exists(args.config):
        raise CliError(EXIT_USAGE, f"config file not found: {args.config}")
    try:
        return load_config(args.config)
    except ConfigError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None


def _apply_overrides(config, args):
    evolution = config.evolution
    if getattr(args, "seed", None) is not None:
        evolution = replace(evolution, rng_seed=args.seed)
    selection = getattr(args, "selection", None)
    if selection in ("elitist", "dc"):
        evolution = replace(
            evolution,
            selection="deterministic_crowding" if selection == "dc"
            else "elitist")
    if getattr(args, "sizes", None):
        config = replace(config, evolution=evolution,
                         sweep_sizes=_parse_sizes(args.sizes))
    else:
        config = replace(config, evolution=evolution)
    return config


def build_parser():
    parser = argparse.ArgumentParser(
        prog="subsevo",
        description="Evolve training-set subsets as fitness predictors.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", help="experiment config file")
        p.add_argument("--data-dir", help="dataset directory "
                       "(or SUBSEVO_DATA_DIR)")
        p.add_argument("--seed", type=int, help="evolution rng seed override")
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--sizes", help="comma-separated predictor sizes")
        p.add_argument("--selection", choices=("elitist", "dc", "both"),
                       help="selection strategy (both = paired comparison)")
        p.add_argument("--quiet", action="store_true",
                       help="suppress per-iteration output")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel fitness evaluations")

    common(sub.add_parser("evolve", help="run one subset evolution"), "out")
    common(sub.add_parser("sweep", help="evolution across predictor sizes"),
           "out")
    common(sub.add_parser("bench", help="epoch-timing benchmark"), "out")
    train = sub.add_parser("train", help="train one model")
    common(train, "out")
    train.add_argument("--predictor", help="train on this exported predictor "
                       "instead of the full set")
    plot = sub.add_parser("plot", help="render CSVs as an SVG chart")
    common(plot, "out")
    plot.add_argument("--kind", choices=("fitness", "timing"),
                      default="fitness")
    plot.add_argument("csv", nargs="+", help="input CSV files")
    return parser


def _dispatch(args) -> int:
    config = _load_config(args)
    config = _apply_overrides(config, args)

    if args.command == "evolve":
        if args.selection == "both":
            compare_selection_strategies(config, args.out, quiet=args.quiet,
                                         workers=args.workers,
                                         data_dir=args.data_dir)
        else:
            run_evolve(config, args.out, quiet=args.quiet,
                       workers=args.workers, data_dir=args.data_dir)
    elif args.command == "sweep":
        run_size_sweep(config, args.out, quiet=args.quiet,
                       workers=args.workers, data_dir=args.data_dir)
    elif args.command == "bench":
        run_timing_bench(config, args.out, quiet=args.quiet,
                         seed=args.seed, data_dir=args.data_dir)
    elif args.command == "train":
        predictor = None
        if args.predictor:
            if not os.path.exists(args.predictor):
                raise CliError(EXIT_USAGE,
                               f"predictor file not found: {args.predictor}")
            predictor = load_predictor(args.predictor)
        run_train(config, args.out, quiet=args.quiet,
                  data_dir=args.data_dir, predictor=predictor)
    elif args.command == "plot":
        kind = "fitness_curve" if args.kind == "fitness" else "timing_line"
        out = args.out
        if not out.endswith(".svg"):
            os.makedirs(out, exist_ok=True)
            out = os.path.join(out, f"{args.kind}.svg")
        for path in args.csv:
            if not os.path.exists(path):
                raise CliError(EXIT_USAGE, f"input CSV not found: {path}")
        emit_plot(args.csv, kind, out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _dispatch(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IdxFormatError) as exc:
        print(f"error: data loading failed: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
