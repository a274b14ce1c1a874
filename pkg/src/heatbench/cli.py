"""Command-line interface: run scenarios, suites, and plot-data extraction."""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (PLOT_KINDS, Scenario, SuiteConfig, emit_plot_data, run_scenario,
                      run_suite, scenario_from_ini, suite_from_ini)
from .mdp import ComfortBand

_PRICE_ALIASES = {"flat": "flat", "dual": "dual", "rtp": "real_time"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatbench",
        description="Space-heating control benchmark: emulator, baselines and RL agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario (plus the RBC baseline)")
    run.add_argument("--scenario", help="INI scenario file; flags override it")
    run.add_argument("--agent", choices=["rbc", "mpc", "mbrl", "mfrl"])
    run.add_argument("--price", choices=["flat", "dual", "rtp"])
    run.add_argument("--days", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--name")
    run.add_argument("--out", required=True, help="output directory")

    suite = sub.add_parser("suite", help="run every agent on shared traces")
    suite.add_argument("--config", help="INI suite file")
    suite.add_argument("--days", type=int)
    suite.add_argument("--seed", type=int)
    suite.add_argument("--price", choices=["flat", "dual", "rtp"])
    suite.add_argument("--out", required=True)

    plot = sub.add_parser("plot", help="derive plot-ready CSVs from a log")
    plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    plot.add_argument("--log", required=True)
    plot.add_argument("--band-low", type=float, default=19.0)
    plot.add_argument("--band-high", type=float, default=23.0)
    plot.add_argument("--out", required=True)
    return parser


def _cmd_run(args) -> int:
    overrides = {}
    if args.agent:
        overrides["agent"] = args.agent
    if args.price:
        overrides["tariff_kind"] = _PRICE_ALIASES[args.price]
    if args.days is not None:
        overrides["days"] = args.days
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.name:
        overrides["name"] = args.name

    if args.scenario:
        scenario = scenario_from_ini(args.scenario, overrides)
    else:
        scenario = Scenario(**overrides)
        scenario.validate()

    report = run_scenario(scenario, args.out)
    print(f"scenario {report.scenario_name}: agent={report.agent} "
          f"consumption={report.consumption_change_pct:+.2f}% "
          f"cost={report.cost_change_pct:+.2f}% "
          f"comfort_loss={report.comfort_loss_eur:.2f} EUR "
          f"({report.wall_seconds:.1f}s)")
    print(f"logs: {report.agent_log_path} | {report.baseline_log_path}")
    return 0


def _cmd_suite(args) -> int:
    overrides = {}
    if args.days is not None:
        overrides["days"] = args.days
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.price:
        overrides["price"] = args.price

    if args.config:
        cfg = suite_from_ini(args.config, overrides)
    else:
        cfg = SuiteConfig(days=overrides.get("days", 30),
                          seed=overrides.get("seed", 0),
                          tariff_kind=_PRICE_ALIASES[overrides.get("price", "flat")])

    rows = run_suite(cfg, args.out)
    width = max(len(r["agent"]) for r in rows)
    print(f"{'agent':<{width}}  consumption%  cost%     comfort EUR  status")
    for r in rows:
        if r["status"] == "ok":
            print(f"{r['agent']:<{width}}  {r['consumption_change_pct']:+11.2f}  "
                  f"{r['cost_change_pct']:+8.2f}  {r['comfort_loss_eur']:11.2f}  ok")
        else:
            print(f"{r['agent']:<{width}}  {'-':>11}  {'-':>8}  {'-':>11}  {r['status']}")
    return 0 if all(r["status"] == "ok" for r in rows) else 1


def _cmd_plot(args) -> int:
    band = ComfortBand(args.band_low, args.band_high)
    dest = emit_plot_data(args.log, args.kind, args.out, band)
    print(f"wrote {dest}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "suite":
            return _cmd_suite(args)
        return _cmd_plot(args)
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
