#!/usr/bin/env python3
"""Dual-tariff comparison: cost savings should outpace consumption savings
for the planning controllers (load shifting into cheap night hours)."""

import argparse

from heatbench.harness import SuiteConfig, run_suite


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--days", type=int, default=150)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results/dual")
    args = parser.parse_args()

    cfg = SuiteConfig(name="dual", days=args.days, seed=args.seed, tariff_kind="dual")
    rows = run_suite(cfg, args.out)
    print(f"{'agent':6s} {'cons %':>8s} {'cost %':>8s} {'comfort EUR':>12s}")
    for r in rows:
        if r["status"] == "ok":
            shift = abs(r["cost_change_pct"]) - abs(r["consumption_change_pct"])
            print(f"{r['agent']:6s} {r['consumption_change_pct']:8.2f} "
                  f"{r['cost_change_pct']:8.2f} {r['comfort_loss_eur']:12.2f} "
                  f"  (shift margin {shift:+.2f} pp)")
        else:
            print(f"{r['agent']:6s} {r['status']}")


if __name__ == "__main__":
    main()
