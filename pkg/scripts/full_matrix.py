"""Full experiment matrix: 3 scenarios x 6 node counts x 10 seeds x 1000 s.

Writes results.csv, the six SVG charts and a timing note to --out-dir.
Every run is executed with invariant checks on; any violation aborts the sweep.

    python3 scripts/full_matrix.py --out-dir results/full --jobs 8
"""

import argparse
import os
import sys
import time
from pathlib import Path

from larsim.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="results/full")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--sim-time", type=float, default=1000.0)
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    t0 = time.perf_counter()
    code = main(["sweep", "--scenario", "1,2,3", "--seeds", str(args.seeds), "--sim-time", str(args.sim_time),
                 "--jobs", str(args.jobs), "--out-dir", args.out_dir, "--plot"])
    wall = time.perf_counter() - t0
    note = f"jobs={args.jobs} cpus={os.cpu_count()} wall_clock_s={wall:.1f} exit={code}\n"
    Path(args.out_dir, "timing.txt").write_text(note)
    print(note, end="")
    sys.exit(code)
