"""Constant-bit-rate flows between random node pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CbrFlow:
    source: int
    destination: int
    packet_size: int = 512
    interval: float = 0.25
    start: float = 10.0
    end: float = 990.0

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError("flow source and destination must differ")
        if not self.start < self.end:
            raise ValueError("flow must start before it ends")
        if self.interval <= 0:
            raise ValueError("interval must be > 0")

    @property
    def packet_count(self) -> int:
        return math.floor((self.end - self.start) / self.interval + 1e-9) + 1


def make_flows(
    n_flows: int,
    node_count: int,
    rng,
    sim_time: float = 1000.0,
    warmup: float = 10.0,
    packet_size: int = 512,
    interval: float = 0.25,
) -> list[CbrFlow]:
    """Draw `n_flows` distinct ordered (source, destination) pairs uniformly."""
    if node_count < 2:
        raise ValueError("need at least two nodes for traffic")
    n_pairs = node_count * (node_count - 1)
    if n_flows > n_pairs:
        raise ValueError(f"{n_flows} flows requested but only {n_pairs} ordered pairs exist")
    if n_flows == 0:
        return []
    picks = rng.choice(n_pairs, size=n_flows, replace=False)
    flows = []
    for k in picks.tolist():
        src, rest = divmod(k, node_count - 1)
        dst = rest if rest < src else rest + 1
        flows.append(
            CbrFlow(src, dst, packet_size, interval, start=warmup, end=sim_time - warmup)
        )
    return flows


def emit(flow: CbrFlow) -> list[tuple[int, float]]:
    """(sequence id, send time) for every packet the flow offers."""
    return [(k, flow.start + k * flow.interval) for k in range(flow.packet_count)]
