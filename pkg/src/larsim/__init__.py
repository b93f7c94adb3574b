"""Discrete-event simulation of LAR scheme 1 routing over Manhattan-grid vehicle mobility."""

from larsim.geometry import (
    ExpectedZone,
    LocationRecord,
    Position,
    RequestZone,
    contains,
    distance,
    expected_zone,
    request_zone,
)

__version__ = "0.1.0"

__all__ = [
    "ExpectedZone",
    "LocationRecord",
    "Position",
    "RequestZone",
    "contains",
    "distance",
    "expected_zone",
    "request_zone",
]
