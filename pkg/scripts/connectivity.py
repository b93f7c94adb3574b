"""How often are CBR flow endpoints in the same unit-disk component?

Samples the mobility trajectory every 5 s over 300 s for seeds 1 to 3 and
reports, per node count, the fraction of (flow, instant) pairs whose source
and destination are connected, along with the mean node degree. This bounds
the delivery ratio any protocol without store-and-forward can reach.

    python3 scripts/connectivity.py --scenario 1
"""

import argparse

import numpy as np

from larsim.config import preset
from larsim.engine import Simulation


def components(adj: np.ndarray) -> np.ndarray:
    n = len(adj)
    label = np.full(n, -1)
    for start in range(n):
        if label[start] >= 0:
            continue
        label[start] = start
        stack = [start]
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(adj[u] & (label < 0)):
                label[v] = start
                stack.append(v)
    return label


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="1")
    p.add_argument("--nodes", default="25,50,75,100,125,150")
    args = p.parse_args()
    cfg = preset(args.scenario).with_overrides(sim_time=300.0)
    r2 = cfg.radio_range ** 2
    print(f"{'nodes':>6} {'connected':>10} {'degree':>7}")
    for n in (int(v) for v in args.nodes.split(",")):
        hits, degs = [], []
        for seed in (1, 2, 3):
            sim = Simulation(cfg, n, seed)
            for t in range(10, 300, 5):
                pos = sim.samples[t]
                d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=2)
                adj = d2 <= r2
                np.fill_diagonal(adj, False)
                degs.append(adj.sum(axis=1).mean())
                lab = components(adj)
                hits += [lab[f.source] == lab[f.destination] for f in sim.flows]
        print(f"{n:>6} {np.mean(hits):>10.3f} {np.mean(degs):>7.1f}")
