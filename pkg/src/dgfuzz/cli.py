"""``dgfuzz`` command line: distance, fuzz, compare, theory, benchmarks."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .cutloss import Mode
from .distance import DEFAULT_C_MULT, compute_distance_map, write_distance_file
from .fuzzer.campaign import run_campaign
from .fuzzer.config import _CONVERTERS, ConfigError, format_config, load_config
from .harness import ExperimentSpec, bundled_benchmarks, run_experiment, write_experiment
from .icfg import GraphError, load_icfg
from .theory import default_p_grid, format_theory_csv, theory_table

OUT_ENV = "DGFUZZ_OUT"


class UsageError(Exception):
    pass


def _out_dir(arg: Optional[str], default: str) -> Path:
    env = os.environ.get(OUT_ENV)
    return Path(env or arg or default)


def _emit(text: str, out: Optional[str]) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_distance(args) -> int:
    graph = load_icfg(args.graph)
    dm = compute_distance_map(graph, args.c_mult)
    _emit(write_distance_file(dm), args.output)
    return 0


def cmd_fuzz(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    for key, conv in _CONVERTERS.items():
        value = getattr(args, key, None)
        if value is None:
            continue
        try:
            overrides[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for --{key.replace('_', '-')}: {exc}") from None
    for key in ("graph", "seeds", "distances"):
        if getattr(args, key, None):
            overrides[key] = Path(getattr(args, key))
    if overrides:
        cfg = cfg.with_(**overrides)
    report = run_campaign(cfg)
    out = _out_dir(args.out, "dgfuzz-out")
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / "series.csv").write_text(report.series_csv())
    (out / "summary.txt").write_text(report.summary())
    (out / "config.txt").write_text(format_config(cfg))
    crash_dir = out / "crashes"
    for t in report.trials:
        for rec in t.crashes:
            crash_dir.mkdir(exist_ok=True)
            name = f"trial{t.trial}_{str(rec.crash_site).replace(':', '_')}"
            (crash_dir / name).write_bytes(rec.input)
    if not args.quiet:
        sys.stdout.write(report.summary())
    return 0


def cmd_compare(args) -> int:
    spec = ExperimentSpec(
        benchmarks=args.benchmark or ["demo_min2"], p_values=args.p, trials=args.trials,
        budget=args.budget, t_x=args.t_x, rng_seed=args.rng_seed, mode=Mode(args.mode),
        granularity=args.granularity, c_mult=args.c_mult,
        stop_on_target=args.stop_on_target, jobs=args.jobs, t1_over_t2=args.t1_over_t2)
    result = run_experiment(spec)
    out = _out_dir(args.out, "dgfuzz-compare")
    write_experiment(result, out)
    sys.stdout.write(result.table.render())
    sys.stdout.write("\n")
    sys.stdout.write(result.render_theory())
    sys.stdout.write(f"\ntime unit: executed blocks (virtual time); reports in {out}\n")
    return 0


def cmd_theory(args) -> int:
    if args.p_grid:
        grid = args.p_grid
    else:
        grid = default_p_grid(args.p_step)
    for p in grid:
        if not 0 <= p <= 1:
            raise UsageError(f"p values must lie in [0, 1], got {p}")
    rows = theory_table(grid, args.r_bar, args.u_bar, args.t1_over_t2, args.runs, args.seed)
    _emit(format_theory_csv(rows), args.output)
    return 0


def cmd_benchmarks(args) -> int:
    for name in bundled_benchmarks():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgfuzz", description="Directed fuzzing with probabilistic cut-the-loss on synthetic program graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="write the block distance file of a graph")
    p.add_argument("graph")
    p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    p.add_argument("--c-mult", type=int, default=DEFAULT_C_MULT)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("fuzz", help="run a campaign from a config file",
                       description=f"Reports go to --out, or ${OUT_ENV} when set.")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.add_argument("-q", "--quiet", action="store_true")
    for key in sorted(_CONVERTERS):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, metavar="VALUE")
    for key in ("graph", "seeds", "distances"):
        p.add_argument(f"--{key}", dest=key, default=None, metavar="PATH")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("compare", help="sweep p over bundled or given benchmarks",
                       description=f"Reports go to --out, or ${OUT_ENV} when set.")
    p.add_argument("-b", "--benchmark", action="append",
                   help="bundled benchmark name or directory with graph.icfg and seeds/ (repeatable)")
    p.add_argument("--p", type=float, nargs="+", default=[0.0, 0.1])
    p.add_argument("--trials", type=int, default=7)
    p.add_argument("--budget", type=float, default=500_000)
    p.add_argument("--t-x", type=float, default=100_000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.ALWAYS.value)
    p.add_argument("--granularity", type=int, default=10)
    p.add_argument("--c-mult", type=int, default=DEFAULT_C_MULT)
    p.add_argument("--t1-over-t2", type=float, default=0.0)
    p.add_argument("--stop-on-target", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("theory", help="analytical saving and speedup over a p grid")
    p.add_argument("--p-grid", type=float, nargs="+", default=None)
    p.add_argument("--p-step", type=float, default=0.05)
    p.add_argument("--r-bar", type=float, required=True)
    p.add_argument("--u-bar", type=float, required=True)
    p.add_argument("--t1-over-t2", type=float, default=0.0)
    p.add_argument("--runs", type=int, default=0, help="Monte Carlo runs per p (0 disables)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("benchmarks", help="list bundled benchmarks")
    p.set_defaults(func=cmd_benchmarks)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GraphError, UsageError, ValueError, OSError) as exc:
        print(f"dgfuzz {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
