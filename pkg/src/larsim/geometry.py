"""Expected zone / request zone geometry for LAR scheme 1.

Everything here is a pure function over frozen dataclasses, so it is safe to
share between threads and processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")


@dataclass(frozen=True)
class LocationRecord:
    """What a node knows about another node's whereabouts."""

    node_id: int
    position: Position
    timestamp: float
    avg_speed: float

    def __post_init__(self):
        if self.avg_speed < 0:
            raise ValueError(f"avg_speed must be >= 0, got {self.avg_speed}")


@dataclass(frozen=True)
class ExpectedZone:
    center: Position
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")


@dataclass(frozen=True)
class RequestZone:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted rectangle {self}")

    @classmethod
    def whole_area(cls, width: float, height: float) -> "RequestZone":
        return cls(0.0, float(width), 0.0, float(height))


def expected_zone(record: LocationRecord, now: float) -> ExpectedZone:
    """Circle around the last known position that the node can have reached by `now`."""
    if now < record.timestamp:
        raise ValueError(
            f"query time {now} precedes location timestamp {record.timestamp}"
        )
    return ExpectedZone(record.position, record.avg_speed * (now - record.timestamp))


def request_zone(source: Position, ez: ExpectedZone) -> RequestZone:
    """Smallest axis-aligned rectangle holding the source and the whole expected-zone disk."""
    c, r = ez.center, ez.radius
    return RequestZone(
        x_min=min(source.x, c.x - r),
        x_max=max(source.x, c.x + r),
        y_min=min(source.y, c.y - r),
        y_max=max(source.y, c.y + r),
    )


def contains(zone: RequestZone, p: Position) -> bool:
    # closed rectangle: edge points are members
    return zone.x_min <= p.x <= zone.x_max and zone.y_min <= p.y <= zone.y_max


def distance(p: Position, q: Position) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)
