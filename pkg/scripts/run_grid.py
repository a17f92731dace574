"""Run the benchmark grid on both paths, write a CSV and report the latency/MAC fits.

    python scripts/run_grid.py --out results/grid.csv [--repeats 50]
"""
import argparse
from pathlib import Path

from convprim.bench import emit_csv, load_plan, regress, run_sweep

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--plan", default=HERE / "grid.yaml")
    ap.add_argument("--out", default="grid.csv")
    ap.add_argument("--repeats", type=int)
    args = ap.parse_args()

    cfg = load_plan(args.plan)
    if args.repeats:
        cfg.repeats = args.repeats
    records = run_sweep(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    emit_csv(records, args.out)
    print(f"{len(records)} rows -> {args.out}")

    for path in ("ref", "fast"):
        rows = [r for r in records if r.path == path]
        fit = regress(rows, "macs", "latency")
        print(f"{path:>4}: latency ~ MACs  r2={fit.r2:.4f}  slope={fit.slope * 1e9:.3f} ns/MAC")
        for kind in sorted({r.primitive for r in rows}):
            sub = [r for r in rows if r.primitive == kind]
            print(f"      {kind:<20} r2={regress(sub).r2:.4f}")

    by_key = {(r.experiment, r.primitive, r.groups, r.kernel, r.input_width, r.in_channels,
               r.out_channels, r.path): r for r in records}
    print("\nspeedup (ref / fast latency), experiment 3:")
    for (exp, kind, *shape, path), r in sorted(by_key.items()):
        if exp == 3 and path == "ref" and kind != "add":
            f = by_key[(exp, kind, *shape, "fast")]
            print(f"  {kind:<20} width={r.input_width:>2}  {r.latency_mean_ns / f.latency_mean_ns:5.2f}x")


if __name__ == "__main__":
    main()
