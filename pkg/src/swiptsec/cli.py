"""Command-line entry point: ``swiptsec {montecarlo,single,sweep,selftest}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .allocator import AllocationError, Scheme, validate_weights
from .harness import ExperimentConfig, format_single, run_montecarlo, run_single, run_sweep, selftest, write_outputs


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _schemes(text: str) -> tuple:
    names = [t.strip() for t in text.split(",") if t.strip()]
    by_lower = {s.value.lower(): s.value for s in Scheme}
    out = []
    for n in names:
        if n.lower() not in by_lower:
            raise argparse.ArgumentTypeError(f"unknown scheme {n!r}; choose from {', '.join(by_lower.values())}")
        out.append(by_lower[n.lower()])
    if not out:
        raise argparse.ArgumentTypeError("empty scheme list")
    return tuple(out)


def _weights(text: str) -> tuple:
    parts = [float(t) for t in text.split(",")]
    if len(parts) == 1:
        parts = [parts[0], 1.0 - parts[0]]
    return validate_weights(parts)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    common.add_argument("--seed", type=_u64, help="master seed (montecarlo) or draw seed (single, sweep)")
    common.add_argument("--out", type=Path, help="output path")
    common.add_argument("--schemes", type=_schemes, help="comma-separated scheme names")
    common.add_argument("--lambda-points", type=_positive, help="number of weights from (1,0) to (0,1)")
    common.add_argument("--realizations", type=_positive, help="number of channel draws")
    common.add_argument("--receivers", type=_positive, help="number of receivers K (1 desired + K-1 idle)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="swiptsec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("montecarlo", parents=[common], help="averaged trade-off table (CSV + metadata sidecar)")
    single = sub.add_parser("single", parents=[common], help="detailed report for one draw at one weight")
    single.add_argument("--lam", type=_weights, default=(0.5, 0.5), help="weight lambda1[,lambda2]")
    single.add_argument("--json", action="store_true", help="print machine-readable JSON")
    single.add_argument("--dump-program", type=Path, help="write the relaxed program as a text listing")
    sub.add_parser("sweep", parents=[common], help="per-weight table for one draw")
    sub.add_parser("selftest", parents=[common], help="solver conformance and pipeline checks")
    return p


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = str(args.out)
    if args.schemes is not None:
        overrides["schemes"] = args.schemes
    if args.lambda_points is not None:
        overrides["lambda_points"] = args.lambda_points
        overrides["lambda_grid"] = None
    if args.realizations is not None:
        overrides["realizations"] = args.realizations
    if args.receivers is not None:
        overrides["num_receivers"] = args.receivers
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"swiptsec: bad configuration: {exc}", file=sys.stderr)
        return 2

    if args.command == "montecarlo":
        result = run_montecarlo(cfg, keep_records=False)
        csv_path, meta_path = write_outputs(result)
        print(f"wrote {csv_path} and {meta_path} ({len(result.rows)} rows, {result.elapsed_s:.1f} s)")
        return 0
    if args.command == "single":
        report = run_single(cfg, cfg.seed, args.lam)
        if args.dump_program and report["status"] == "ok":
            from .allocator import ProblemKind, build_transformed, compute_utopia
            from .channel import gram_matrices, sample_channels
            from .sdp.textio import dump

            system = cfg.system()
            grams = gram_matrices(sample_channels(cfg.seed, system))
            utopia = compute_utopia(grams, cfg.qos(), system.eps)
            dump(build_transformed(grams, cfg.qos(), system.eps, ProblemKind.P3, args.lam, utopia), args.dump_program)
        text = json.dumps(report, indent=2, sort_keys=True) + "\n" if args.json else format_single(report)
        _emit(text, args.out)
        return 0
    if args.command == "sweep":
        try:
            _emit(run_sweep(cfg, cfg.seed), args.out)
        except AllocationError as exc:
            print(f"swiptsec: draw {cfg.seed} has no feasible allocation: {exc}", file=sys.stderr)
            return 1
        return 0
    checks = selftest()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  [{c.detail}]")
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
