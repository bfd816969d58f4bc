"""Command line entry point.

    cable-clt <experiment> --config <path> [--seed N] [--out DIR]
              [--reps N] [--format json|csv|markdown-summary]

Exit codes: 0 all checks passed, 1 statistical failure, 2 configuration
error, 3 numerical failure.  The CABLE_CLT_OUT environment variable sets the
default output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .harness import (
    EXIT_CONFIG_ERROR,
    EXIT_NUMERICAL_ERROR,
    EXIT_PASS,
    EXIT_STAT_FAIL,
    EXPERIMENTS,
    OUTPUT_DIR_ENV,
    ExperimentConfig,
    emit_report,
    run_experiment,
)
from .model import ConfigurationError, NumericalFailureError

_REPORT_SUFFIX = {"json": "report.json", "csv": "report.csv",
                  "markdown-summary": "report.md"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cable-clt",
        description="Run a named verification experiment for the stochastic "
                    "cable equation's spatial-average limit theorems.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--reps", type=int, default=None, help="override n_rep")
    parser.add_argument("--format", choices=sorted(_REPORT_SUFFIX), default=None,
                        help="additionally write the report in this format")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
        overrides = {"experiment": args.experiment}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.reps is not None:
            overrides["n_rep"] = args.reps
        cfg = dataclasses.replace(cfg, **overrides)
        out_dir = args.out or os.environ.get(OUTPUT_DIR_ENV) or cfg.out_dir
        manifest = run_experiment(cfg, out_dir=out_dir)
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except NumericalFailureError as exc:
        where = ""
        if exc.replicate is not None:
            where = f" (replicate {exc.replicate}"
            where += f", step {exc.step})" if exc.step is not None else ")"
        print(f"numerical failure: {exc}{where}", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR

    if args.format is not None:
        path = Path(out_dir) / _REPORT_SUFFIX[args.format]
        path.write_text(emit_report(manifest, args.format), encoding="utf-8")

    for check in manifest.checks:
        flag = "PASS" if check.passed else "FAIL"
        print(f"[{flag}] {check.name}: value {check.value:.6g}"
              + (f" (threshold {check.threshold:.6g})" if check.threshold is not None else ""))
    print(f"{manifest.experiment}: {'PASS' if manifest.passed else 'FAIL'}")
    return EXIT_PASS if manifest.passed else EXIT_STAT_FAIL


if __name__ == "__main__":
    sys.exit(main())
