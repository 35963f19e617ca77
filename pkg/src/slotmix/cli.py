"""Command-line entry point: ``python -m slotmix <subcommand>``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import harness
from .errors import SlotmixError
from .geometry import read_point_set, sample_points, write_point_set
from .mac import (
    RadioConfig,
    greedy_schedule,
    guard_zone_lower_bound,
    lattice_schedule,
    search_lattice,
    validate_schedule,
    write_schedule,
)
from .spectral import spectral_report, write_spectral_report
from .topology import (
    DEFAULT_ETA,
    build_cluster_graph,
    build_disk_graph,
    build_longrange_graph,
    critical_radius,
    degree_stats,
    is_connected,
    write_graph,
)


def _instance_args(p):
    p.add_argument("--points", help="reuse a point-set file instead of sampling")
    p.add_argument("-n", type=int, default=200)
    p.add_argument("-d", "--dimension", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=harness.KINDS, default="short")
    radius = p.add_mutually_exclusive_group()
    radius.add_argument("--r", type=float, help="absolute connection radius")
    radius.add_argument("--r-multiple", type=float, default=2.0, help="radius as a multiple of r_c")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--rho", type=int, default=1)


def _instance(args):
    pts = read_point_set(args.points) if args.points else sample_points(args.n, args.dimension, args.seed)
    r = args.r if args.r is not None else args.r_multiple * critical_radius(pts.n, pts.dimension)
    if args.kind == "short":
        g = build_disk_graph(pts, r)
    elif args.kind == "long":
        g = build_longrange_graph(pts, r, args.gamma, args.eta)
    else:
        g = build_cluster_graph(pts, r, args.gamma, args.eta, args.rho)
    return pts, g


def _out_dir(args) -> Path:
    out = harness._output_path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args):
    pts, g = _instance(args)
    out = _out_dir(args)
    write_point_set(pts, out / "points.txt")
    write_graph(g, out / "graph.txt")
    dmin, dmax, mean, _ = degree_stats(g)
    print(f"n={pts.n} d={pts.dimension} kind={g.kind} edges={g.n_edges} "
          f"degree min/mean/max={dmin}/{mean:.2f}/{dmax} connected={is_connected(g)}")
    return 0


def cmd_analyze(args):
    pts, g = _instance(args)
    row = spectral_report(pts, g, eps=args.eps)
    if args.out:
        write_spectral_report([row], harness._output_path(args.out))
    else:
        for key, val in row.items():
            print(f"{key}: {val}")
    return 0


def cmd_schedule(args):
    pts, g = _instance(args)
    radio = RadioConfig(args.alpha, args.beta)
    if args.protocol == "greedy":
        sched = greedy_schedule(pts, g, radio, seed=args.seed)
    elif args.theta is not None:
        sched = lattice_schedule(pts, g, radio, args.theta)
    else:
        _, sched = search_lattice(pts, g, radio)
    report = validate_schedule(pts, g, sched)
    lb = guard_zone_lower_bound(pts, g, radio)
    print(f"protocol={sched.meta.get('protocol')} length={sched.length} guard_zone_lb={lb} "
          f"feasible={report.feasible} missing={report.n_missing}")
    if "theta" in sched.meta:
        print(f"theta={sched.meta['theta']}")
    if args.out:
        write_schedule(sched, harness._output_path(args.out))
    if not report.feasible:
        print(f"error: schedule leaves {report.n_missing} directed edges uncovered", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args):
    cfg = harness.load_config(args.config)
    if args.mixing_mode:
        cfg.mixing_mode = args.mixing_mode
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.workers:
        cfg.workers = args.workers
    cfg.validate()
    records = harness.run_sweep(cfg)
    out = args.out or cfg.output or "sweep.csv"
    path = harness.export(records, out, plot=("r", "slot_mixing_time"), metadata={"config": str(args.config)})
    failed = sum(1 for r in records if r.error)
    print(f"{len(records)} rows written to {path} ({failed} with errors)")
    problems = harness.audit_records(records)
    for msg in problems:
        print(f"audit: {msg}", file=sys.stderr)
    return 1 if problems else 0


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k, v in row.items():
            try:
                row[k] = float(v) if v != "" else None
            except ValueError:
                pass
    return rows


def cmd_fit(args):
    rows = _read_rows(args.csv)
    group = tuple(args.group_by.split(",")) if args.group_by else None
    fits = harness.fit_slope(rows, args.x, args.y, group)
    if not isinstance(fits, dict):
        fits = {"all": fits}
    print("group,exponent,stderr,r_squared,points")
    for key, fit in fits.items():
        print(f"{key},{fit.exponent:.6g},{fit.stderr:.3g},{fit.r_squared:.4f},{fit.n_points}")
    return 0


def cmd_tradeoff(args):
    rates = np.linspace(args.rmin, args.rmax, args.points)
    rates, values = harness.rate_tradeoff_curve(rates, args.dimension, args.alpha)
    best = rates[int(np.argmin(values))]
    lines = ["R,penalty"] + [f"{r:.17g},{v:.17g}" for r, v in zip(rates, values)]
    if args.out:
        path = harness._output_path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    print(f"minimum at R={best:.6g} (alpha/d={args.alpha / args.dimension:.6g})", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slotmix", description="Consensus mixing over scheduled wireless topologies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write point-set and graph files")
    _instance_args(p)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="spectral report for one instance")
    _instance_args(p)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--out", help="CSV file for the report row")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("schedule", help="build and validate a TDMA schedule")
    _instance_args(p)
    p.add_argument("--protocol", choices=["lattice", "greedy"], default="lattice")
    p.add_argument("--theta", type=float, help="fixed lattice spacing factor; searched if omitted")
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--out", help="schedule file")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("sweep", help="run a full experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="run a single seed instead of the config's list")
    p.add_argument("--out", help="CSV path")
    p.add_argument("--mixing-mode", choices=harness.MIXING_MODES)
    p.add_argument("--workers", type=int)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="log-log slope over an existing sweep CSV")
    p.add_argument("csv")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--group-by")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tradeoff", help="rate tradeoff curve exp(R d/alpha)/R")
    p.add_argument("-d", "--dimension", type=int, default=2)
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--rmin", type=float, default=0.05)
    p.add_argument("--rmax", type=float, default=8.0)
    p.add_argument("--points", type=int, default=800)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_tradeoff)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SlotmixError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
