"""Command-line entry point: ``annealed-mpc {run,compare,landscape,sweep,keys}``."""
from __future__ import annotations

import argparse
import itertools
import os
import sys
from typing import List, Optional

from .. import _accel
from .config import ConfigError, describe_keys, load_config
from .runner import (
    BudgetParityError,
    MismatchLeakError,
    run_experiment,
    summarize,
    summary_table,
    timing_report,
    write_outputs,
)

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _overrides(args) -> List[tuple]:
    out = []
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError("--set", f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out.append((k.strip(), v.strip()))
    if getattr(args, "env", None):
        out.append(("env.id", args.env))
    if getattr(args, "solver", None):
        out.append(("solvers", args.solver))
    if getattr(args, "seed", None) is not None:
        out.append(("run.seeds", str(args.seed)))
    if getattr(args, "out", None):
        out.append(("out.dir", args.out))
    return out


def _load(args):
    return load_config(args.config, args.preset, _overrides(args))


def cmd_run(args) -> int:
    cfg = _load(args)
    if len(cfg.solvers) != 1:
        raise ConfigError("solvers", "'run' takes exactly one solver; use 'compare' for several")
    return _execute(cfg, args)


def cmd_compare(args) -> int:
    return _execute(_load(args), args)


def _execute(cfg, args) -> int:
    records = run_experiment(cfg)
    rows = summarize(records)
    write_outputs(records, rows, cfg.out_dir, trajectories=not args.no_trajectories)
    print(summary_table(rows), end="")
    print(f"backend: {_accel.backend_name()}")
    print(timing_report(records))
    print(f"wrote {cfg.out_dir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    grid = cfg.sweep
    records, labels, rows = [], {}, []
    for b1, b2, n, sb in itertools.product(grid["beta1"], grid["beta2"], grid["iterations"],
                                           grid["sigma_base"]):
        ov = {"beta1": b1, "beta2": b2, "iterations": n, "sigma_base": sb}
        recs = run_experiment(cfg, ["dial"], overrides=ov)
        row = summarize(recs)[0]
        row.label = f"{b1!r}|{b2!r}|{n}|{sb!r}"
        rows.append(row)
        records += recs
    cols = ("beta1", "beta2", "iterations", "sigma_base")
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_outputs(records, rows, cfg.out_dir, extra_columns=cols, trajectories=False)
    print(summary_table(rows, cols), end="")
    print(f"wrote {cfg.out_dir}")
    return 0


def cmd_landscape(args) -> int:
    from .plots import write_landscape_artifacts  # matplotlib only loads when needed

    out = args.out or "out/landscape"
    for path in write_landscape_artifacts(out):
        print(f"wrote {path}")
    return 0


def cmd_keys(args) -> int:
    print(describe_keys())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="annealed-mpc",
                                description="Annealed sampling-based MPC experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solver_help):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--preset", help="named preset applied before the config file")
        sp.add_argument("--seed", type=int, help="run a single seed (overrides run.seeds)")
        sp.add_argument("--out", help="output directory (overrides out.dir)")
        sp.add_argument("--solver", help=solver_help)
        sp.add_argument("--env", help="environment id (overrides env.id)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key; repeatable")
        sp.add_argument("--no-trajectories", action="store_true",
                        help="skip the per-seed trajectory CSVs")

    sp = sub.add_parser("run", help="one solver, all seeds")
    common(sp, "solver id")
    sp.set_defaults(func=cmd_run)
    sp = sub.add_parser("compare", help="equal-budget multi-solver table")
    common(sp, "comma list of solver ids")
    sp.set_defaults(func=cmd_compare)
    sp = sub.add_parser("sweep", help="grid over beta1, beta2, N and sigma_base for DIAL")
    common(sp, "ignored; sweeps always run dial")
    sp.set_defaults(func=cmd_sweep)
    sp = sub.add_parser("landscape", help="density, drift and score artifacts")
    sp.add_argument("--out", help="output directory (default out/landscape)")
    sp.set_defaults(func=cmd_landscape)
    sp = sub.add_parser("keys", help="list the config key registry")
    sp.set_defaults(func=cmd_keys)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"annealed-mpc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetParityError, MismatchLeakError) as exc:
        print(f"annealed-mpc: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
