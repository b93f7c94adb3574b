"""Unit-disk radio channel with an overlap collision rule.

A frame from `s` is received by every node within `range` of `s`, except at a
receiver `r` where some other frame overlapping in time was sent by a node
within range of `r` (that includes `r` itself: a node cannot hear while it is
transmitting). There is no capture; both frames die at `r`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


@dataclass(frozen=True)
class RadioParams:
    range: float = 250.0
    bitrate: float = 2e6
    propagation_delay: float = 3.336e-9  # s per metre
    max_unicast_retries: int = 3
    backoff_window: float = 5e-3

    def __post_init__(self):
        if self.range <= 0 or self.bitrate <= 0:
            raise ValueError("range and bitrate must be positive")
        if self.max_unicast_retries < 0:
            raise ValueError("max_unicast_retries must be >= 0")
        if self.backoff_window < 0:
            raise ValueError("backoff_window must be >= 0")

    def airtime(self, size_bytes: int) -> float:
        return size_bytes * 8 / self.bitrate


@dataclass
class Transmission:
    sender: int
    packet: Any
    start: float
    end: float
    unicast_target: int | None = None
    tx_id: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError("transmission must have positive duration")

    def overlaps(self, other: "Transmission") -> bool:
        # back-to-back frames (end == start) do not collide
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Reception:
    receiver: int
    time: float
    tx_id: int


def neighbors(node: int, positions: np.ndarray, params: RadioParams) -> set[int]:
    """Nodes within range of `node` (boundary inclusive), excluding itself."""
    return set(neighbor_array(node, positions, params.range).tolist())


def neighbor_array(node: int, positions: np.ndarray, radio_range: float) -> np.ndarray:
    d2 = ((positions - positions[node]) ** 2).sum(axis=1)
    mask = d2 <= radio_range * radio_range
    mask[node] = False
    return np.flatnonzero(mask)


def _in_range(positions, a: int, b: int, radio_range: float) -> bool:
    dx = positions[a, 0] - positions[b, 0]
    dy = positions[a, 1] - positions[b, 1]
    return dx * dx + dy * dy <= radio_range * radio_range


def collision_mask(
    receivers: np.ndarray,
    tx: Transmission,
    others: Sequence[Transmission],
    positions: np.ndarray,
    radio_range: float,
) -> np.ndarray:
    """Boolean per receiver: does some other frame overlapping `tx` reach it?"""
    senders = [o.sender for o in others if o is not tx and o.overlaps(tx)]
    if not senders or len(receivers) == 0:
        return np.zeros(len(receivers), dtype=bool)
    rp = positions[receivers]
    sp = positions[np.asarray(senders)]
    d2 = ((rp[:, None, :] - sp[None, :, :]) ** 2).sum(axis=2)
    # a node that is itself transmitting cannot receive (distance 0 covers it)
    return (d2 <= radio_range * radio_range).any(axis=1)


def collided_at(
    receiver: int,
    tx: Transmission,
    others: Sequence[Transmission],
    positions: np.ndarray,
    radio_range: float,
) -> bool:
    """True when some other frame overlapping `tx` is audible at `receiver`."""
    return bool(collision_mask(np.array([receiver]), tx, others, positions, radio_range)[0])


def broadcast(
    tx: Transmission,
    positions: np.ndarray,
    params: RadioParams,
    others: Sequence[Transmission] = (),
    collisions: bool = True,
) -> tuple[list[Reception], list[int]]:
    """Reception events for a broadcast frame, plus the receivers lost to collision."""
    r2 = params.range * params.range
    diff = positions - positions[tx.sender]
    d2 = diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1]
    mask = d2 <= r2
    mask[tx.sender] = False
    receivers = np.flatnonzero(mask)
    lost_mask = np.zeros(len(receivers), dtype=bool)
    if collisions and len(receivers):
        rp = positions[receivers]
        for o in others:
            if o is tx or not o.overlaps(tx):
                continue
            dd = rp - positions[o.sender]
            lost_mask |= dd[:, 0] * dd[:, 0] + dd[:, 1] * dd[:, 1] <= r2
    times = tx.end + np.sqrt(d2[receivers]) * params.propagation_delay
    ok = [
        Reception(r, t, tx.tx_id)
        for r, t, lost in zip(receivers.tolist(), times.tolist(), lost_mask.tolist())
        if not lost
    ]
    return ok, receivers[lost_mask].tolist()


@dataclass(frozen=True)
class UnicastResult:
    delivered: bool
    attempts: int
    reception: Reception | None = None
    reason: str = ""  # "", "out_of_range" or "retries_exhausted"


def unicast(
    tx: Transmission,
    positions: np.ndarray,
    params: RadioParams,
    rng,
    others: Sequence[Transmission] = (),
    collisions: bool = True,
) -> UnicastResult:
    """Deliver `tx` to its target with bounded retries over a fixed contention schedule.

    `others` is the set of competing frames; retries are placed after a backoff
    drawn uniformly from [0, backoff_window] and re-checked against the same
    schedule. Positions are held fixed across attempts.
    """
    if tx.unicast_target is None:
        raise ValueError("unicast needs a target")
    target = tx.unicast_target
    if not _in_range(positions, tx.sender, target, params.range):
        return UnicastResult(False, 0, reason="out_of_range")
    duration = tx.end - tx.start
    attempt_tx = tx
    for attempt in range(1, params.max_unicast_retries + 2):
        if not (collisions and collided_at(target, attempt_tx, others, positions, params.range)):
            d = float(np.hypot(*(positions[target] - positions[tx.sender])))
            rec = Reception(target, attempt_tx.end + d * params.propagation_delay, tx.tx_id)
            return UnicastResult(True, attempt, rec)
        start = attempt_tx.end + rng.uniform(0.0, params.backoff_window)
        attempt_tx = Transmission(tx.sender, tx.packet, start, start + duration, target, tx.tx_id)
    return UnicastResult(False, params.max_unicast_retries + 1, reason="retries_exhausted")
