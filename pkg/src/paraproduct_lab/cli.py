"""Command-line front end: ``paraproduct-lab <experiment> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from .sequences import CoefficientSequence, lift_matrix, load_matrix


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not clobber values given before the subcommand
    common = argparse.ArgumentParser(add_help=False,
                                     argument_default=argparse.SUPPRESS if suppress else None)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--depth", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="suppress the summary on stderr")
    common.add_argument("--jobs", type=int, help="threads for independent trials")
    return common


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paraproduct-lab", description=__doc__,
                                parents=[_common(False)])
    common = _common(True)
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("verify-thm1", parents=[common], help="matrix norm vs lifted form norm")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--matrix", action="append", help="CSV matrix file (repeatable)")
    sp = sub.add_parser("hadamard-gap", parents=[common], help="X vs X' on Walsh matrices")
    sp.add_argument("--m-max", type=int, dest="m_max")
    sp = sub.add_parser("bmo-identity", parents=[common], help="identity example table")
    sp.add_argument("--d-max", type=int, dest="d_max")
    sp = sub.add_parser("column-example", parents=[common], help="column example table")
    sp.add_argument("--d-max", type=int, dest="d_max")
    sp = sub.add_parser("necessary", parents=[common], help="necessary conditions on random sequences")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--max-support", type=int, dest="max_support")
    sp = sub.add_parser("random-norms", parents=[common], help="random sign matrix norms")
    sp.add_argument("--n", type=int)
    sp.add_argument("--trials", type=int)
    sp = sub.add_parser("norms", parents=[common], help="all norms of one sequence or matrix")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--lambda", dest="lam", help="sequence JSON file")
    src.add_argument("--matrix", help="CSV matrix file, lifted before evaluation")
    sp = sub.add_parser("calibrate", parents=[common], help="sweep for the embedding constants")
    sp.add_argument("--trials", type=int)
    return p


_CONFIG_KEYS = {"seed", "depth", "tol", "format", "out", "jobs", "dim", "trials", "m_max",
                "d_max", "n", "max_support"}


def _config(args) -> ex.ExperimentConfig:
    overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS and v is not None}
    if args.config:
        return ex.ExperimentConfig.from_json(args.config, **overrides)
    return ex.ExperimentConfig(**overrides)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config(args)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "norms":
        try:
            if args.lam:
                lam = CoefficientSequence.load(args.lam)
            else:
                lam = lift_matrix(load_matrix(args.matrix))
            depth = max(cfg.depth, lam.max_scale) if args.depth is None else cfg.depth
            summary = ex.norms_summary(lam, depth)
        except (OSError, KeyError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        _emit(json.dumps(summary, indent=2), cfg.out)
        return 0

    if args.command == "calibrate":
        seed = 7 if args.seed is None else cfg.seed
        trials = cfg.trials or 400
        _emit(json.dumps(ex.calibrate_constants(seed, trials, cfg.depth), indent=2), cfg.out)
        return 0

    try:
        if args.command == "verify-thm1" and args.matrix:
            report = ex.run_thm1(cfg, [load_matrix(m) for m in args.matrix])
        else:
            report = ex.EXPERIMENTS[args.command](cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(report.dumps(cfg.format), cfg.out)
    if not args.quiet:
        print("\n".join(report.summary_lines()), file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
