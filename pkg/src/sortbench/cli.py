"""``sortbench`` command line."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .config import ALGORITHMS, RunConfig, UsageError
from .models import CalibrationError
from .runtime import ConfigurationError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _algo_list(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
    return algos


def _count(text: str) -> int:
    return int(float(text))  # accepts 2e4


def build_parser() -> argparse.ArgumentParser:
    seed = harness.default_seed()
    parser = argparse.ArgumentParser(prog="sortbench", description="Parallel sorting benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--procs", type=int, default=1)
    p.add_argument("--cores", type=int, default=1)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--mode", choices=("wall", "counted"), default="counted")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--csv")
    p.add_argument("--trace")

    p = sub.add_parser("exp1", help="time vs. process count and core count")
    p.add_argument("--algos", type=_algo_list, default=list(ALGORITHMS))
    for algo in ALGORITHMS:
        p.add_argument(f"--n-{algo}", type=_count, default=harness.DEFAULT_SIZES[algo])
    p.add_argument("--procs", type=_int_list, default=list(harness.DEFAULT_PROCS))
    p.add_argument("--cores", type=_int_list, default=list(harness.DEFAULT_CORES))
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--mode", choices=("wall", "counted"), default="counted")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--trace-dir")
    p.add_argument("--csv", required=True)

    p = sub.add_parser("exp2", help="memory vs. data size on two processes")
    p.add_argument("--algos", type=_algo_list, default=list(ALGORITHMS))
    for algo in ALGORITHMS:
        p.add_argument(f"--{algo}-sizes", type=_int_list,
                       default=list(harness.DEFAULT_MEMORY_SIZES[algo]))
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--csv", required=True)

    p = sub.add_parser("model", help="fit the analytic models to an experiment CSV")
    p.add_argument("--fit", required=True, metavar="FROM.csv")
    p.add_argument("--out", required=True, metavar="PATH")
    return parser


def _run(args) -> None:
    cfg = RunConfig(args.algo, args.n, args.procs, args.cores, args.seed, args.mode, args.reps)
    rep = harness.run(cfg)
    ratio = harness.overhead_ratio(rep)
    row = {
        "algorithm": cfg.algorithm, "n": cfg.n, "m": cfg.procs, "k": cfg.cores,
        "time_s": None if rep.counted else rep.wall_seconds,
        "weighted_ops": rep.weighted_ops,
        "compute_s": rep.compute_seconds, "overhead_s": rep.overhead_seconds,
        "ratio": ratio.aggregate,
    }
    if args.csv:
        harness.write_csv(args.csv, harness.EXP1_COLUMNS, [row])
    if args.trace:
        harness.emit_trace(rep, args.trace)
    print(" ".join(f"{k}={harness._fmt(v)}" for k, v in row.items()))


def _exp1(args) -> None:
    sizes = {a: getattr(args, f"n_{a}") for a in ALGORITHMS}
    rows, _ = harness.experiment1(args.algos, sizes, args.procs, args.cores, args.seed,
                                  args.mode, args.reps, args.trace_dir, args.csv)
    print(f"wrote {len(rows)} rows to {args.csv}")


def _exp2(args) -> None:
    sizes = {a: getattr(args, f"{a}_sizes") for a in ALGORITHMS}
    rows, _ = harness.experiment2(args.algos, sizes, args.seed, args.csv)
    print(f"wrote {len(rows)} rows to {args.csv}")


def _model(args) -> None:
    from .curves import model_from_csv

    summary = model_from_csv(args.fit, args.out)
    for algo, fit in summary.get("fits", {}).items():
        params = " ".join(f"{k}={v:.4g}" for k, v in fit["params"].items())
        print(f"{algo}: {params} max|rel resid|={fit['max_abs_relative_residual']:.3g}")
    print("wrote " + ", ".join(summary["files"]))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": _run, "exp1": _exp1, "exp2": _exp2, "model": _model}[args.command]
    try:
        handler(args)
    except harness.VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (UsageError, ConfigurationError, CalibrationError, FileNotFoundError) as exc:
        print(f"sortbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
