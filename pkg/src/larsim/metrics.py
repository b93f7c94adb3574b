"""Packet accounting, delivery ratio, mean delay and multi-seed aggregation."""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field

TERMINAL_STATES = (
    "delivered",
    "dropped_queue",
    "dropped_collision_exhausted",
    "dropped_no_route",
    "in_flight_at_end",
)


@dataclass
class MetricsAccumulator:
    packets_sent: int = 0
    packets_received: int = 0
    delay_sum: float = 0.0
    send_times: dict = field(default_factory=dict)
    delays: dict = field(default_factory=dict)
    drops: Counter = field(default_factory=Counter)

    def on_send(self, uid, now: float) -> None:
        self.packets_sent += 1
        self.send_times[uid] = now

    def on_deliver(self, uid, now: float) -> float:
        if uid in self.delays:
            raise RuntimeError(f"packet {uid} delivered twice")
        delay = now - self.send_times[uid]
        if delay <= 0:
            raise RuntimeError(f"non-positive delay for packet {uid}")
        self.packets_received += 1
        self.delay_sum += delay
        self.delays[uid] = delay
        return delay

    def on_drop(self, uid, state: str) -> None:
        if state not in TERMINAL_STATES[1:4]:
            raise ValueError(f"unknown drop state {state!r}")
        self.drops[state] += 1

    def terminal_counts(self) -> dict[str, int]:
        counts = {s: 0 for s in TERMINAL_STATES}
        counts["delivered"] = self.packets_received
        counts.update({k: v for k, v in self.drops.items()})
        counts["in_flight_at_end"] = self.packets_sent - sum(
            v for k, v in counts.items() if k != "in_flight_at_end"
        )
        return counts


def pdr(acc: MetricsAccumulator) -> float:
    """Delivered over offered data packets; 0 when nothing was offered."""
    if acc.packets_sent == 0:
        return 0.0
    return acc.packets_received / acc.packets_sent


def avg_delay(acc: MetricsAccumulator) -> float:
    """Mean send-to-delivery latency over delivered packets only; 0 when none arrived."""
    if acc.packets_received == 0:
        return 0.0
    return acc.delay_sum / acc.packets_received


@dataclass(frozen=True)
class RunReport:
    scenario: str
    node_count: int
    seed: int
    pdr: float
    avg_delay: float
    sent: int
    received: int
    collisions: int = 0
    discoveries: int = 0
    protocol_errors: int = 0
    events: int = 0
    no_traffic: bool = False
    no_delivery: bool = False
    terminal: tuple = ()

    def row(self) -> dict:
        return {
            "scenario": self.scenario,
            "nodes": self.node_count,
            "seed": self.seed,
            "pdr": repr(float(self.pdr)),
            "avg_delay_s": repr(float(self.avg_delay)),
            "sent": self.sent,
            "received": self.received,
            "collisions": self.collisions,
            "discoveries": self.discoveries,
        }


@dataclass(frozen=True)
class ScenarioSummary:
    scenario: str
    node_count: int
    runs: int
    pdr_mean: float
    pdr_std: float
    pdr_min: float
    pdr_max: float
    delay_mean: float
    delay_std: float
    delay_min: float
    delay_max: float
    sent: float
    received: float
    collisions: float
    discoveries: float

    def row(self) -> dict:
        return {
            "scenario": self.scenario,
            "nodes": self.node_count,
            "seed": "AGG",
            "pdr": repr(float(self.pdr_mean)),
            "avg_delay_s": repr(float(self.delay_mean)),
            "sent": repr(float(self.sent)),
            "received": repr(float(self.received)),
            "collisions": repr(float(self.collisions)),
            "discoveries": repr(float(self.discoveries)),
        }


def _stats(xs: list[float]) -> tuple[float, float, float, float]:
    mean = statistics.fmean(xs)
    std = statistics.pstdev(xs) if len(xs) > 1 else 0.0
    return mean, std, min(xs), max(xs)


def aggregate(reports: list[RunReport]) -> ScenarioSummary:
    """Mean (and spread) of per-seed results for one (scenario, node count) cell."""
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    keys = {(r.scenario, r.node_count) for r in reports}
    if len(keys) != 1:
        raise ValueError(f"reports mix scenario/node-count cells: {sorted(keys)}")
    scenario, nodes = keys.pop()
    # sort so the float sums are independent of input order
    reports = sorted(reports, key=lambda r: r.seed)
    p = _stats([r.pdr for r in reports])
    d = _stats([r.avg_delay for r in reports])
    mean = lambda attr: statistics.fmean(getattr(r, attr) for r in reports)  # noqa: E731
    return ScenarioSummary(
        scenario, nodes, len(reports), *p, *d,
        mean("sent"), mean("received"), mean("collisions"), mean("discoveries"),
    )
