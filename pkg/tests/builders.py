"""Builders and checks shared by the oracle tests and the acceptance suite."""

import numpy as np

from larsim.channel import RadioParams, Transmission, broadcast
from larsim.config import ScenarioConfig
from larsim.engine import Simulation
from larsim.geometry import LocationRecord, Position, RequestZone, contains
from oracles import bfs_reachable, receptions_brute_force, unit_disk_edges

RANGE = 250.0
DISCOVERY_AT = 5.0


def static_discovery(seed, *, whole_area=False, n=None, side=None):
    """One route discovery over a random static layout, contention off, no retry flood.

    Returns (sim, origin, destination, positions). The origin's location record for
    the destination is a noisy, stale fix so the request zone varies in size.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 31)) if n is None else n
    side = float(rng.uniform(400, 1000)) if side is None else side
    pos = rng.uniform(0, side, (n, 2))
    origin, dest = (int(v) for v in rng.choice(n, 2, replace=False))
    cfg = ScenarioConfig(scenario="custom", contention=False, fallback_flood=False,
                         sim_time=DISCOVERY_AT + 0.9, warmup=0.0, n_flows=0)
    sim = Simulation(cfg, n, seed, static_positions=pos, flows=[], event_log=True,
                     seed_locations=False)
    node = sim.nodes[origin]
    if not whole_area:
        guess = pos[dest] + rng.normal(0, 40, 2)
        node.location_table[dest] = LocationRecord(
            dest, Position(float(guess[0]), float(guess[1])), 0.0, float(rng.uniform(0, 30))
        )
    sim.schedule(DISCOVERY_AT, node.initiate_discovery, dest)
    sim.run()
    return sim, origin, dest, pos


def _zone_of(sim, origin):
    (entry,) = [e for e in sim.event_log if e[1] == origin and e[2] == "rreq_originate"]
    return RequestZone(*entry[3][3])


def check_discovery(seed, whole_area):
    sim, origin, dest, pos = static_discovery(seed, whole_area=whole_area)
    n = len(pos)
    edges = unit_disk_edges(pos, RANGE)
    zone = _zone_of(sim, origin)
    if whole_area:
        assert zone == sim.whole_area
    members = {i for i in range(n) if contains(zone, Position(*pos[i]))}
    allowed = members | {origin, dest}
    expected = bfs_reachable(n, edges, origin, dest, allowed)
    cached = sim.nodes[origin].route_cache.get(dest)
    assert (cached is not None) == expected, (seed, origin, dest)
    if cached is not None:
        route = cached[0]
        assert route[0] == origin and route[-1] == dest
        assert len(set(route)) == len(route)
        assert all((a, b) in edges for a, b in zip(route, route[1:]))
        assert set(route[1:-1]) <= members
    return expected


def check_containment(seed):
    sim, origin, dest, pos = static_discovery(seed)
    zone = _zone_of(sim, origin)
    forwards = [e for e in sim.event_log if e[2] == "rreq_forward"]
    for _, node, _, (key, (x, y)) in forwards:
        assert contains(zone, Position(x, y)), (seed, node)
        assert contains(zone, Position(*pos[node]))
    per_node = [(node, key) for _, node, _, (key, _) in forwards]
    assert len(per_node) == len(set(per_node))
    return len(forwards), sum(e[2] == "rreq_drop_zone" for e in sim.event_log)


def random_schedule(rng, n_nodes=20, n_tx=50, horizon=0.05):
    pos = rng.uniform(0, 800, (n_nodes, 2))
    txs = []
    for k in range(n_tx):
        start = float(rng.uniform(0, horizon))
        dur = float(rng.choice([0.0002, 0.0005, 0.002048]))
        txs.append(Transmission(int(rng.integers(n_nodes)), None, start, start + dur, tx_id=k))
    return pos, txs


def check_schedule(rng, radio=RadioParams()):
    """Compare broadcast reception sets with the brute-force oracle for one random schedule."""
    pos, txs = random_schedule(rng)
    expected = receptions_brute_force(txs, pos.tolist(), radio.range, radio.propagation_delay)
    got = {}
    for i, tx in enumerate(txs):
        recs, _ = broadcast(tx, pos, radio, txs)
        for r in recs:
            got[(i, r.receiver)] = r.time
    assert got.keys() == expected.keys()
    for k in got:
        assert abs(got[k] - expected[k]) <= 1e-12
    return len(got)
