"""Command line front end.

Subcommands: ``allocate`` (one-round allocation table), ``schedule`` (slot
plan of a round as CSV), ``simulate`` (full run, CSV reports to a
directory), ``compare`` (realized Nash products per policy over contact
durations), ``sweep`` (fairness aggregate per basic slot size).

Exit codes: 0 on success, 2 for argument or scenario-schema problems, 3
when the allocation problem is infeasible.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bargaining import InfeasibleProblemError, dissemination_rate, gnbs_allocate, nash_product, wpf_aggregate
from .grouping import schedule_csv_rows
from .scenario_io import SchemaError, load_scenario, preset_scenario
from .simulate import (
    POLICIES,
    compare_policies,
    derive_seed,
    run_scenario,
    scale_contact_durations,
    slot_size_sweep,
)


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
    src.add_argument("--preset", metavar="NAME", help="built-in scenario (table1, dynamic4)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")


def _load(args) -> object:
    scenario = preset_scenario(args.preset) if args.preset else load_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario


def _float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise SchemaError(f"{flag} expects a comma-separated list of numbers") from None
    if not values:
        raise SchemaError(f"{flag} must not be empty")
    return values


def _first_round(scenario, policy):
    report = run_scenario(scenario, policy=policy)
    if not report.rounds:
        raise SchemaError("scenario never forms a group of two or more nodes")
    return report


def cmd_allocate(args) -> int:
    scenario = _load(args)
    report = _first_round(scenario, args.policy)
    rnd = report.rounds[0]
    problem, alloc = rnd.problem, rnd.allocation
    gsa_alloc, _ = gnbs_allocate(problem)
    nash = nash_product(problem, alloc)
    wpf = wpf_aggregate(problem, gsa_alloc, alloc)

    rows = []
    for k, player in enumerate(problem.players):
        u = problem.utilities[k]
        util = float(u.value(alloc.broadcast_time[k])) if u is not None else 0.0
        rows.append((
            player.id,
            player.role,
            float(alloc.upload_time[k]),
            float(alloc.broadcast_time[k]),
            dissemination_rate(problem, alloc, k),
            util,
        ))

    if args.format == "csv":
        print("node_id,role,upload_s,broadcast_s,rate_mbps,utility")
        for r in rows:
            print(f"{r[0]},{r[1]},{r[2]:.6f},{r[3]:.6f},{r[4]:.6f},{r[5]:.6f}")
        print(f"nash_product={nash:.6f}", file=sys.stderr)
        print(f"wpf_vs_gsa={wpf:.6f}", file=sys.stderr)
    else:
        print(f"policy {args.policy}: airtime {problem.airtime:.3f}s, "
              f"{'saturated' if alloc.saturated else 'contended'}")
        print(f"{'node':<8}{'role':<8}{'upload_s':>10}{'broadcast_s':>12}{'rate_mbps':>11}{'utility':>9}")
        for r in rows:
            print(f"{r[0]:<8}{r[1]:<8}{r[2]:>10.3f}{r[3]:>12.3f}{r[4]:>11.3f}{r[5]:>9.3f}")
        print(f"nash_product {nash:.6f}")
        print(f"wpf_vs_gsa {wpf:.6f}")
    return 0


def cmd_schedule(args) -> int:
    scenario = _load(args)
    report = _first_round(scenario, args.policy)
    if not (0 <= args.round < len(report.rounds)):
        raise SchemaError(f"round {args.round} out of range (0..{len(report.rounds) - 1})")
    rnd = report.rounds[args.round]
    if rnd.schedule is None:
        print("node_id,kind,start_s,duration_s")
        return 0
    if args.format == "table":
        print(f"round {rnd.index}: cycle {rnd.schedule.cycle_length * 1000:.3f} ms, "
              f"{len(rnd.schedule.entries)} slots from {rnd.t_start:.3f}s")
        for e in rnd.schedule.entries:
            print(f"{e.node:<8}{e.kind:<10}{e.start:>12.6f}{e.duration:>12.6f}")
    else:
        for line in schedule_csv_rows(rnd.schedule):
            print(line)
    return 0


def cmd_simulate(args) -> int:
    scenario = _load(args)
    report = run_scenario(scenario, policy=args.policy)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    lines = ["round,start_s,end_s,mode,go_id,members,airtime_s,nash_realized,nash_ideal,wpf_vs_ideal"]
    for r in report.rounds:
        lines.append(
            f"{r.index},{r.t_start:.6f},{r.t_end:.6f},{r.mode},{r.go_id},"
            f"{';'.join(r.members)},{r.airtime:.6f},"
            f"{r.nash_realized:.6f},{r.nash_ideal:.6f},{r.wpf_vs_ideal:.6f}"
        )
    (out / "rounds.csv").write_text("\n".join(lines) + "\n")

    lines = ["node_id,transmitted_mb,received_mb"]
    for node_id in sorted(report.transmitted_mb):
        lines.append(f"{node_id},{report.transmitted_mb[node_id]:.6f},{report.received_mb[node_id]:.6f}")
    (out / "delivery.csv").write_text("\n".join(lines) + "\n")

    lines = [
        "metric,value",
        f"rounds,{len(report.rounds)}",
        f"nash_product_realized,{report.nash_product_realized:.6f}",
        f"nash_product_ideal,{report.nash_product_ideal:.6f}",
        f"wpf_aggregate_vs_ideal,{report.wpf_aggregate_vs_ideal:.6f}",
    ]
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")

    print(f"policy {report.policy}: {len(report.rounds)} rounds, "
          f"nash_realized {report.nash_product_realized:.6f}, "
          f"reports in {out}")
    return 0


def cmd_compare(args) -> int:
    scenario = _load(args)
    durations = _float_list(args.durations, "--durations")
    base_seed = scenario.seed
    print("duration_s," + ",".join(POLICIES))
    for di, duration in enumerate(durations):
        scaled = scale_contact_durations(scenario, duration)
        sums = dict.fromkeys(POLICIES, 0.0)
        for rep in range(args.reps):
            run = replace(scaled, seed=derive_seed(base_seed, "compare", di, rep))
            for policy, rpt in compare_policies(run).items():
                sums[policy] += rpt.nash_product_realized
        means = [sums[p] / args.reps for p in POLICIES]
        print(f"{duration:.6f}," + ",".join(f"{m:.6f}" for m in means))
    return 0


def cmd_sweep(args) -> int:
    scenario = _load(args)
    sizes_ms = _float_list(args.slot_sizes, "--slot-sizes")
    results = slot_size_sweep(scenario, [ms / 1000.0 for ms in sizes_ms], repetitions=args.reps)
    print("t_slot_ms,mean_wpf,stddev_wpf")
    for (t_slot, mean, std), ms in zip(results, sizes_ms):
        print(f"{ms:.6f},{mean:.6f},{std:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="airfair",
                                     description="Fair airtime allocation for sharing groups")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("allocate", help="solve one allocation round and print the split")
    _add_scenario_args(p)
    p.add_argument("--policy", choices=POLICIES, default="gsa")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(fn=cmd_allocate)

    p = sub.add_parser("schedule", help="print the slot schedule of one round")
    _add_scenario_args(p)
    p.add_argument("--policy", choices=POLICIES, default="gsa")
    p.add_argument("--round", type=int, default=0)
    p.add_argument("--format", choices=("table", "csv"), default="csv")
    p.set_defaults(fn=cmd_schedule)

    p = sub.add_parser("simulate", help="run a scenario and write CSV reports")
    _add_scenario_args(p)
    p.add_argument("--policy", choices=POLICIES, default="gsa")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="realized Nash products per policy over durations")
    _add_scenario_args(p)
    p.add_argument("--durations", required=True, metavar="S1,S2,...")
    p.add_argument("--reps", type=int, default=10)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("sweep", help="fairness aggregate per basic slot size")
    _add_scenario_args(p)
    p.add_argument("--slot-sizes", required=True, metavar="MS1,MS2,...")
    p.add_argument("--reps", type=int, default=20)
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    try:
        return args.fn(args)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except InfeasibleProblemError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
