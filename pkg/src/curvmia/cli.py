"""Command-line entry point.

Subcommands map onto pipeline stages (each runs everything it depends on,
skipping stages that are already fresh in the output directory):

    gen-data       build/load the example pool
    train-shadows  pool + target model + shadow ensemble
    score          ... + per-(example, model) statistics
    attack         ... + per-example membership scores
    evaluate       ... + metrics.json and ROC tables
    sweep          dataset-size sweep (one experiment per size)
    fit-bound      fit the privacy-vs-performance curve to a CSV of points
    theory         print the distinguishability bounds for given constants

Experiments are described by JSON manifests; flags only select the manifest
and override the output directory, seed, and worker count.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .pipeline import ExperimentManifest, StageError, fit_bound_file, run_experiment, \
    sweep_dataset_size, sweep_rows_csv
from .serialize import dumps_canonical, write_canonical
from .theory import BoundInputs, bound_report

_STAGE_OF_COMMAND = {
    "gen-data": "data",
    "train-shadows": "shadows",
    "score": "scores",
    "attack": "attacks",
    "evaluate": "metrics",
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--manifest", required=True, help="path to the experiment manifest JSON")
    sub.add_argument("--out", default=None, help="override the manifest's output directory")
    sub.add_argument("--seed", type=int, default=None, help="override the master seed")
    sub.add_argument("--jobs", type=int, default=None, help="worker processes for training/scoring")


def _manifest_from_args(args) -> ExperimentManifest:
    manifest = ExperimentManifest.load(args.manifest)
    if args.out is not None:
        manifest = replace(manifest, out_dir=args.out)
    if args.seed is not None:
        manifest = replace(manifest, master_seed=args.seed)
    if args.jobs is not None:
        manifest = replace(manifest, n_jobs=args.jobs)
    if getattr(args, "header", False):
        manifest = replace(manifest, dataset=replace(manifest.dataset, csv_header=True))
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvmia",
        description="Membership-inference auditing with input loss curvature.")
    commands = parser.add_subparsers(dest="command", required=True)

    for command, helptext in [
        ("gen-data", "generate or load the example pool"),
        ("train-shadows", "train the target model and the shadow ensemble"),
        ("score", "compute per-(example, model) statistics"),
        ("attack", "compute per-example membership scores"),
        ("evaluate", "compute attack metrics and ROC tables"),
    ]:
        sub = commands.add_parser(command, help=helptext)
        _add_common(sub)
        if command == "gen-data":
            sub.add_argument("--header", action="store_true",
                             help="skip the first row of a CSV dataset")

    sweep = commands.add_parser("sweep", help="dataset-size sweep")
    _add_common(sweep)
    sweep.add_argument("--sizes", required=True,
                       help="comma-separated pool sizes, e.g. 50,100,200")
    sweep.add_argument("--selection", choices=["random", "lowest_curvature"],
                       default="random")

    fit = commands.add_parser("fit-bound", help="fit the privacy-vs-performance curve")
    fit.add_argument("--points", required=True, help="CSV of epsilon,value rows")
    fit.add_argument("--out", default=None, help="write the fit result JSON here")

    theory = commands.add_parser("theory", help="print distinguishability bounds")
    theory.add_argument("--epsilon", type=float, required=True)
    theory.add_argument("--m", type=int, required=True)
    theory.add_argument("--L", type=float, default=None,
                        help="loss ceiling (default: the clamped cross-entropy ceiling)")
    theory.add_argument("--sigma", type=float, default=1.0)
    theory.add_argument("--gamma", type=float, default=0.0)
    theory.add_argument("--delta-bias", type=float, default=0.0)
    theory.add_argument("--rho-term", type=float, default=0.0)
    theory.add_argument("--delta-conf", type=float, default=0.05)
    theory.add_argument("--out", default=None, help="write the report JSON here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in _STAGE_OF_COMMAND:
            manifest = _manifest_from_args(args)
            summary = run_experiment(manifest, upto=_STAGE_OF_COMMAND[args.command])
            ran = ", ".join(summary["stages_run"]) or "nothing (all fresh)"
            print(f"{args.command}: ran {ran}; outputs in {summary['out_dir']}")
            if "metrics" in summary:
                print(dumps_canonical(summary["metrics"], indent=2), end="")
        elif args.command == "sweep":
            manifest = _manifest_from_args(args)
            sizes = [int(s) for s in args.sizes.split(",") if s]
            rows = sweep_dataset_size(manifest, sizes, args.selection)
            csv_text = sweep_rows_csv(rows)
            out_path = os.path.join(manifest.out_dir, "sweep.csv")
            os.makedirs(manifest.out_dir, exist_ok=True)
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(csv_text)
            print(csv_text, end="")
            print(f"sweep table written to {out_path}")
        elif args.command == "fit-bound":
            doc = fit_bound_file(args.points, args.out)
            print(dumps_canonical(doc, indent=2), end="")
        elif args.command == "theory":
            kwargs = {"epsilon": args.epsilon, "m": args.m, "sigma": args.sigma,
                      "gamma": args.gamma, "delta_bias": args.delta_bias,
                      "rho_term": args.rho_term, "delta_conf": args.delta_conf}
            if args.L is not None:
                kwargs["L"] = args.L
            report = bound_report(BoundInputs(**kwargs))
            if args.out is not None:
                write_canonical(args.out, report)
            print(dumps_canonical(report, indent=2), end="")
    except StageError as exc:
        print(f"error [stage={exc.stage}]: {exc.cause}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
