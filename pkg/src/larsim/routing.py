"""LAR scheme 1 per-node state machine.

Route discovery floods a RouteRequest that only nodes inside its request zone
rebroadcast. The destination answers each copy it hears with a RouteReply
that walks the accumulated path back to the origin by unicast. Data is then
source-routed along that path. A broken hop sends a RouteError back toward the
origin, and the next packet for that destination triggers a fresh discovery.

A node talks to the rest of the simulator only through the `net` object
(see `larsim.engine.Simulation`): `now`, `position`, `location_now`,
`send_broadcast`, `send_unicast`, `set_timer`, `metrics` and `log`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from larsim.geometry import (
    LocationRecord,
    RequestZone,
    contains,
    expected_zone,
    request_zone,
)

# control-frame sizes in bytes; data frames use the configured packet size
RREQ_BASE, RREP_BASE, RERR_SIZE, ADDR = 32, 48, 32, 4


@dataclass
class RouteRequest:
    origin: int
    destination: int
    request_id: int
    zone: RequestZone
    path: tuple

    @property
    def size(self) -> int:
        return RREQ_BASE + ADDR * len(self.path)


@dataclass
class RouteReply:
    route: tuple
    request_id: int
    destination_location: LocationRecord

    @property
    def size(self) -> int:
        return RREP_BASE + ADDR * len(self.route)


@dataclass
class RouteError:
    route: tuple  # origin ... node that saw the break
    broken: tuple  # (from, to)

    size = RERR_SIZE


@dataclass
class DataPacket:
    uid: int
    origin: int
    destination: int
    send_time: float
    size: int
    route: tuple = ()


@dataclass
class DiscoveryState:
    destination: int
    attempt: int
    deadline: float
    token: int


def has_duplicates(path) -> bool:
    return len(set(path)) != len(path)


def _contains_link(route: tuple, link: tuple) -> bool:
    a, b = link
    return any(route[i] == a and route[i + 1] == b for i in range(len(route) - 1))


@dataclass
class RoutingParams:
    discovery_timeout: float = 1.0
    max_attempts: int = 2
    queue_limit: int = 64
    fallback_flood: bool = True
    rreq_jitter: float = 10e-3


class LarNode:
    def __init__(self, node_id: int, net, params: RoutingParams):
        self.id = node_id
        self.net = net
        self.params = params
        self.location_table: dict[int, LocationRecord] = {}
        # destination -> (route, established at, answering request id)
        self.route_cache: dict[int, tuple[tuple, float, int]] = {}
        self.discovery: dict[int, DiscoveryState] = {}
        self.pending: dict[int, deque] = {}
        self.seen: set[tuple[int, int]] = set()
        self.next_request_id = 0

    # -- location table -------------------------------------------------

    def update_location(self, rec: LocationRecord) -> bool:
        old = self.location_table.get(rec.node_id)
        if old is not None and rec.timestamp <= old.timestamp:
            return False
        self.location_table[rec.node_id] = rec
        return True

    # -- application side -----------------------------------------------

    def send_data(self, pkt: DataPacket) -> None:
        net = self.net
        net.metrics.on_send(pkt.uid, net.now)
        dst = pkt.destination
        cached = self.route_cache.get(dst)
        if cached is not None:
            pkt.route = cached[0]
            net.log(self.id, "data_send", pkt.uid, dst)
            net.send_unicast(self.id, pkt.route[1], pkt, self._data_failed)
            return
        q = self.pending.setdefault(dst, deque())
        q.append(pkt)
        net.log(self.id, "data_queue", pkt.uid, dst)
        if len(q) > self.params.queue_limit:
            old = q.popleft()
            net.metrics.on_drop(old.uid, "dropped_queue")
            net.log(self.id, "data_drop_queue", old.uid, dst)
        if dst not in self.discovery:
            self.initiate_discovery(dst)

    # -- discovery --------------------------------------------------------

    def zone_for(self, dst: int, attempt: int) -> RequestZone:
        net = self.net
        rec = self.location_table.get(dst)
        if rec is None or (attempt > 1 and self.params.fallback_flood):
            return net.whole_area
        return request_zone(net.position(self.id), expected_zone(rec, net.now))

    def initiate_discovery(self, dst: int, attempt: int = 1) -> RouteRequest:
        net = self.net
        zone = self.zone_for(dst, attempt)
        self.next_request_id += 1
        rid = self.next_request_id
        self.seen.add((self.id, rid))
        token = rid
        self.discovery[dst] = DiscoveryState(dst, attempt, net.now + self.params.discovery_timeout, token)
        rreq = RouteRequest(self.id, dst, rid, zone, (self.id,))
        net.counters["discoveries"] += 1
        net.log(self.id, "rreq_originate", (self.id, rid), dst, attempt,
                (zone.x_min, zone.x_max, zone.y_min, zone.y_max))
        net.send_broadcast(self.id, rreq)
        net.set_timer(self.params.discovery_timeout, self.on_discovery_timeout, dst, token)
        return rreq

    def on_discovery_timeout(self, dst: int, token: int) -> None:
        state = self.discovery.get(dst)
        if state is None or state.token != token:
            return  # answered, or superseded
        net = self.net
        net.log(self.id, "discovery_timeout", dst, state.attempt)
        if state.attempt < self.params.max_attempts:
            self.initiate_discovery(dst, state.attempt + 1)
            return
        del self.discovery[dst]
        for pkt in self.pending.pop(dst, ()):
            net.metrics.on_drop(pkt.uid, "dropped_no_route")
            net.log(self.id, "data_drop_no_route", pkt.uid, dst)

    def handle_rreq(self, rreq: RouteRequest) -> str:
        net = self.net
        key = (rreq.origin, rreq.request_id)
        if key in self.seen and self.id != rreq.destination:
            # most copies of a flood are duplicates; drop them silently before any other work
            return "drop"
        if has_duplicates(rreq.path):
            net.counters["protocol_errors"] += 1
            net.log(self.id, "rreq_malformed", key)
            return "drop"
        if self.id == rreq.destination:
            route = rreq.path + (self.id,)
            self.seen.add(key)
            rrep = RouteReply(route, rreq.request_id, net.location_now(self.id))
            net.log(self.id, "rrep_send", key, route)
            net.send_unicast(self.id, route[-2], rrep, self._control_failed)
            return "reply"
        pos = net.position(self.id)
        if not contains(rreq.zone, pos):
            net.log(self.id, "rreq_drop_zone", key, (pos.x, pos.y))
            return "drop"
        self.seen.add(key)
        fwd = RouteRequest(rreq.origin, rreq.destination, rreq.request_id, rreq.zone,
                           rreq.path + (self.id,))
        net.log(self.id, "rreq_forward", key, (pos.x, pos.y))
        net.send_broadcast(self.id, fwd, jitter=self.params.rreq_jitter)
        return "forward"

    def handle_rrep(self, rrep: RouteReply) -> None:
        net = self.net
        route = rrep.route
        idx = route.index(self.id)
        if idx > 0:
            net.send_unicast(self.id, route[idx - 1], rrep, self._control_failed)
            return
        dst = route[-1]
        cached = self.route_cache.get(dst)
        if cached is not None and cached[2] >= rrep.request_id:
            # later copies answering the same discovery arrive over longer paths
            net.log(self.id, "rrep_ignored", (self.id, rrep.request_id), route)
            return
        self.route_cache[dst] = (route, net.now, rrep.request_id)
        self.update_location(rrep.destination_location)
        net.log(self.id, "route_install", (self.id, rrep.request_id), route)
        self.discovery.pop(dst, None)
        for pkt in self.pending.pop(dst, ()):
            pkt.route = route
            net.log(self.id, "data_send", pkt.uid, dst)
            net.send_unicast(self.id, route[1], pkt, self._data_failed)

    # -- data plane -------------------------------------------------------

    def handle_data(self, pkt: DataPacket) -> None:
        net = self.net
        if self.id == pkt.destination:
            net.metrics.on_deliver(pkt.uid, net.now)
            net.log(self.id, "data_deliver", pkt.uid, pkt.origin)
            return
        idx = pkt.route.index(self.id)
        net.send_unicast(self.id, pkt.route[idx + 1], pkt, self._data_failed)

    def _data_failed(self, pkt: DataPacket, next_hop: int, reason: str) -> None:
        net = self.net
        net.metrics.on_drop(pkt.uid, "dropped_collision_exhausted")
        net.log(self.id, "link_fail", pkt.uid, next_hop, reason)
        self.on_link_failure(pkt.route, next_hop)

    def on_link_failure(self, route: tuple, dead_next_hop: int) -> None:
        link = (self.id, dead_next_hop)
        idx = route.index(self.id)
        if idx == 0:
            self._purge(route[-1], link)
            return
        err = RouteError(route[: idx + 1], link)
        self.net.send_unicast(self.id, route[idx - 1], err, self._control_failed)

    def handle_rerr(self, err: RouteError) -> None:
        idx = err.route.index(self.id)
        if idx == 0:
            # the origin does not know the destination from the prefix alone
            for dst, (route, _, _) in list(self.route_cache.items()):
                if _contains_link(route, err.broken):
                    self._purge(dst, err.broken)
            return
        self.net.send_unicast(self.id, err.route[idx - 1], err, self._control_failed)

    def _purge(self, dst: int, link: tuple) -> None:
        cached = self.route_cache.get(dst)
        if cached is not None and _contains_link(cached[0], link):
            del self.route_cache[dst]
            self.net.log(self.id, "route_purge", dst, link)

    def _control_failed(self, pkt, next_hop: int, reason: str) -> None:
        # best effort: lost replies are recovered by the origin's timeout
        self.net.log(self.id, "control_lost", type(pkt).__name__, next_hop, reason)

    def receive(self, pkt) -> None:
        if isinstance(pkt, DataPacket):
            self.handle_data(pkt)
        elif isinstance(pkt, RouteRequest):
            self.handle_rreq(pkt)
        elif isinstance(pkt, RouteReply):
            self.handle_rrep(pkt)
        elif isinstance(pkt, RouteError):
            self.handle_rerr(pkt)
        else:
            raise TypeError(f"unknown packet {pkt!r}")
