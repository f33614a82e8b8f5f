"""``pqaoa`` command line: generate, run, transfer, report."""

from __future__ import annotations

import argparse
import logging
import sys

from . import bench
from .exceptions import ValidationError


def _common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="JSON file with ExperimentConfig keys")
    sub.add_argument("--instances", nargs="+", help="instance file globs")
    sub.add_argument("--algorithms", help="comma-separated subset of " + ",".join(bench.ALGORITHMS))
    sub.add_argument("--p-range", help="depths, e.g. 1-6 or 1,2,3")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--output", help="run directory")
    sub.add_argument("--shots", type=int, help="shots per evaluation (default 10^(p+1))")
    sub.add_argument("--subsamples", type=int, help="draws kept per slice")
    sub.add_argument("--max-iters", type=int, help="optimizer iterations")
    sub.add_argument("--final-samples", type=int, help="global samples of the final pass")
    sub.add_argument("--workers", type=int, help="process pool size")
    sub.add_argument("--no-warm-start", action="store_true", help="start every depth from zero angles")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pqaoa", description="Parallel QAOA experiments on routing QUBOs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="write random routing instances")
    gen.add_argument("--config", help="JSON file with GenerateConfig keys")
    gen.add_argument("--count", type=int)
    gen.add_argument("-n", "--customers", type=int, dest="n")
    gen.add_argument("-A", "--vehicles", type=int, dest="A")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--sigma", type=float)
    gen.add_argument("--grid-half", type=int)
    gen.add_argument("--output")

    _common(subs.add_parser("run", help="train and sample every (instance, algorithm, p)"))
    _common(subs.add_parser("transfer", help="evaluate sliced-mode angles on the full circuit"))

    rep = subs.add_parser("report", help="aggregate a run directory")
    rep.add_argument("run_dir")
    rep.add_argument("--no-plots", action="store_true", help="write CSVs only")
    return parser


def _experiment_overrides(args) -> dict:
    training = {k: v for k, v in (("shots_per_eval", args.shots), ("subsamples", args.subsamples),
                                  ("max_iters", args.max_iters), ("final_samples", args.final_samples))
                if v is not None}
    return {
        "instances": args.instances,
        "algorithms": args.algorithms.split(",") if args.algorithms else None,
        "p_range": bench.parse_p_range(args.p_range) if args.p_range else None,
        "seed": args.seed,
        "output_dir": args.output,
        "workers": args.workers,
        "warm_start": False if args.no_warm_start else None,
        "training": training or None,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "generate":
            cfg = bench.load_config(bench.GenerateConfig, args.config, {
                "count": args.count, "n": args.n, "A": args.A, "seed": args.seed, "sigma": args.sigma,
                "grid_half": args.grid_half, "output_dir": args.output})
            return bench.cmd_generate(cfg, sys.stdout)
        if args.command == "report":
            return bench.cmd_report(args.run_dir, sys.stdout, plots=not args.no_plots)
        cfg = bench.load_config(bench.ExperimentConfig, args.config, _experiment_overrides(args))
        run = bench.cmd_run if args.command == "run" else bench.cmd_transfer
        return run(cfg, sys.stdout)
    except (ValidationError, TypeError) as exc:
        print(f"pqaoa: config error: {exc}", file=sys.stderr)
        return bench.EXIT_CONFIG
    except OSError as exc:
        print(f"pqaoa: {exc}", file=sys.stderr)
        return bench.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
