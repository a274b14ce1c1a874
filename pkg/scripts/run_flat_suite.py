#!/usr/bin/env python3
"""Full flat-tariff comparison: all four controllers on shared traces.

Writes per-agent episode logs and the comparison table CSV to --out.
"""

import argparse

from heatbench.harness import SuiteConfig, run_suite


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--days", type=int, default=150)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results/flat")
    args = parser.parse_args()

    cfg = SuiteConfig(name="flat", days=args.days, seed=args.seed, tariff_kind="flat")
    rows = run_suite(cfg, args.out)
    print(f"{'agent':6s} {'cons %':>8s} {'cost %':>8s} {'comfort EUR':>12s} {'wall s':>8s}")
    for r in rows:
        if r["status"] == "ok":
            print(f"{r['agent']:6s} {r['consumption_change_pct']:8.2f} "
                  f"{r['cost_change_pct']:8.2f} {r['comfort_loss_eur']:12.2f} "
                  f"{r['wall_clock_s']:8.1f}")
        else:
            print(f"{r['agent']:6s} {r['status']}")


if __name__ == "__main__":
    main()
