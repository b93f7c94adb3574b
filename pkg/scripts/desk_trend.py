"""Desk-scale trend matrix: 3 scenarios x {25, 75, 150} nodes x 3 seeds x 300 s.

Prints a mean PDR / delay table and writes results.csv plus charts.

    python3 scripts/desk_trend.py --out-dir results/desk
"""

import argparse
import csv
import os

from larsim.cli import main


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="results/desk")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    args = p.parse_args()
    code = main(["sweep", "--scenario", "1,2,3", "--nodes", "25,75,150", "--seeds", "3", "--sim-time", "300",
                 "--jobs", str(args.jobs), "--out-dir", args.out_dir, "--plot", "--quiet"])
    if code:
        raise SystemExit(code)
    with open(os.path.join(args.out_dir, "results.csv"), newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["seed"] == "AGG"]
    print(f"{'scenario':>8} {'nodes':>6} {'pdr':>8} {'delay_s':>9}")
    for r in rows:
        print(f"{r['scenario']:>8} {r['nodes']:>6} {float(r['pdr']):8.4f} {float(r['avg_delay_s']):9.4f}")
