"""Memory accesses per MAC, reference over fast path, for every benchmark-grid sweep point.

    python scripts/access_ratio.py [--csv ratios.csv]
"""
import argparse
import csv
import sys

from convprim.bench import GRID
from convprim.instrument import access_ratio

KINDS = ("standard", "grouped", "depthwise_separable", "shift")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", help="also write long-form rows here")
    args = ap.parse_args()

    rows = []
    for exp, plan in GRID.items():
        print(f"experiment {exp}: sweep {plan.swept_parameter} {list(plan.sweep_values)}")
        for kind in KINDS:
            ratios = [access_ratio(plan.spec_at(v, kind)) for v in plan.sweep_values]
            rows += [(exp, kind, plan.swept_parameter, v, float(r))
                     for v, r in zip(plan.sweep_values, ratios)]
            print(f"  {kind:<20} " + " ".join(f"{float(r):5.2f}" for r in ratios))
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["experiment", "primitive", "swept", "value", "access_ratio"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
