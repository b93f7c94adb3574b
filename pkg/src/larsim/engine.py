"""Single-run discrete-event engine.

Random streams: ``SeedSequence(seed).spawn(3)`` gives (mobility, traffic, mac)
roots. Mobility spawns one child per vehicle (see `larsim.mobility`), traffic
feeds flow selection, and mac spawns one child per node for rebroadcast jitter
and retry backoff. Replaying a mobility trace therefore leaves every
non-mobility draw unchanged.

Positions are sampled on the mobility update grid and linearly interpolated
in between for all range checks.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from larsim import channel
from larsim.config import ScenarioConfig
from larsim.geometry import LocationRecord, Position, RequestZone
from larsim.metrics import MetricsAccumulator, RunReport, avg_delay, pdr
from larsim.mobility import generate_trajectory
from larsim.routing import DataPacket, LarNode, RoutingParams
from larsim.traffic import CbrFlow, make_flows


@dataclass
class Frame:
    packet: object
    target: int | None = None
    on_fail: object = None
    attempts: int = 0


class CausalityError(RuntimeError):
    pass


class InvariantError(RuntimeError):
    pass


class Simulation:
    """One run of one scenario at one node count and seed.

    Pass `trace=(samples, interval)` to replay recorded mobility, or
    `static_positions` (an (n, 2) array) to pin every node in place.
    `flows` overrides the randomly drawn CBR flows.
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        node_count: int,
        seed: int,
        *,
        trace: tuple[np.ndarray, float] | None = None,
        static_positions=None,
        flows: list[CbrFlow] | None = None,
        event_log: bool = False,
        seed_locations: bool = True,
        check_invariants: bool = False,
    ):
        self.cfg = cfg
        self.n = node_count
        self.seed = seed
        self.radio = cfg.radio()
        _, traffic_ss, mac_ss = np.random.SeedSequence(seed).spawn(3)

        if static_positions is not None:
            pos = np.asarray(static_positions, dtype=float)
            if pos.shape != (node_count, 2):
                raise ValueError(f"static positions must have shape ({node_count}, 2)")
            self.samples, self.interval = pos[None, :, :], math.inf
        elif trace is not None:
            samples, interval = trace
            if samples.shape[1] != node_count:
                raise ValueError(f"trace has {samples.shape[1]} nodes, run expects {node_count}")
            if (samples.shape[0] - 1) * interval < cfg.sim_time - 1e-9:
                raise ValueError("trace is shorter than the simulated time")
            self.samples, self.interval = samples, interval
        else:
            self.samples = generate_trajectory(
                node_count, cfg.sim_time, cfg.mobility(), cfg.grid(), seed, check_invariants
            )
            self.interval = cfg.update_interval

        self.mac_rngs = [np.random.default_rng(s) for s in mac_ss.spawn(node_count)]
        if flows is None:
            flows = make_flows(
                cfg.n_flows, node_count, np.random.default_rng(traffic_ss), cfg.sim_time,
                cfg.warmup, cfg.packet_size, cfg.cbr_interval,
            ) if node_count >= 2 else []
        self.flows = flows

        self.check_invariants = check_invariants
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self.events = 0
        self.metrics = MetricsAccumulator()
        self.counters = {"collisions": 0, "discoveries": 0, "protocol_errors": 0}
        self.event_log: list | None = [] if event_log else None
        self.whole_area = RequestZone.whole_area(cfg.area_width, cfg.area_height)

        self._pos_time = None
        self._pos = None
        self._seg_k, self._seg_delta = -1, None
        self._mac_queue = [deque() for _ in range(node_count)]
        self._busy = [False] * node_count
        # frames in start order; anything older than `_horizon` can no longer overlap
        self._recent: deque[channel.Transmission] = deque()
        self._tx_ids = 0
        self._horizon = 0.0
        self._uid = 0

        rp = RoutingParams(
            cfg.discovery_timeout, cfg.max_discovery_attempts, cfg.queue_limit,
            cfg.fallback_flood, cfg.rreq_jitter,
        )
        self.nodes = [LarNode(i, self, rp) for i in range(node_count)]
        if seed_locations:
            # every node starts out knowing every other node's t = 0 fix
            p0 = self.samples[0]
            for node in self.nodes:
                for j in range(node_count):
                    if j != node.id:
                        node.location_table[j] = LocationRecord(
                            j, Position(float(p0[j, 0]), float(p0[j, 1])), 0.0, cfg.mean_speed
                        )
        for i, flow in enumerate(self.flows):
            self.schedule(flow.start, self._app_send, i, 0)

    # -- event queue ------------------------------------------------------

    def schedule(self, t: float, fn, *args) -> None:
        if t < self.now:
            raise CausalityError(f"event at {t} scheduled from {self.now}")
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, fn, args))

    def set_timer(self, delay: float, fn, *args) -> None:
        self.schedule(self.now + delay, fn, *args)

    def run(self, until: float | None = None) -> RunReport:
        end = self.cfg.sim_time if until is None else until
        heap = self._heap
        while heap and heap[0][0] <= end:
            t, _, fn, args = heapq.heappop(heap)
            self.now = t
            self.events += 1
            fn(*args)
        self.now = max(self.now, end)
        rep = self.report()
        if self.check_invariants:
            verify(rep)
        return rep

    def report(self) -> RunReport:
        m = self.metrics
        return RunReport(
            scenario=self.cfg.scenario,
            node_count=self.n,
            seed=self.seed,
            pdr=pdr(m),
            avg_delay=avg_delay(m),
            sent=m.packets_sent,
            received=m.packets_received,
            collisions=self.counters["collisions"],
            discoveries=self.counters["discoveries"],
            protocol_errors=self.counters["protocol_errors"],
            events=self.events,
            no_traffic=m.packets_sent == 0,
            no_delivery=m.packets_received == 0,
            terminal=tuple(sorted(m.terminal_counts().items())),
        )

    def log(self, node: int, kind: str, *ids) -> None:
        if self.event_log is not None:
            self.event_log.append((self.now, node, kind, ids))

    def log_text(self) -> str:
        return "".join(
            f"{t:.9f} {node} {kind} {' '.join(map(repr, ids))}\n"
            for t, node, kind, ids in self.event_log or ()
        )

    # -- positions --------------------------------------------------------

    def positions_at(self, t: float) -> np.ndarray:
        s = self.samples
        if s.shape[0] == 1:
            return s[0]
        k = int(t // self.interval)
        if k >= s.shape[0] - 1:
            return s[-1]
        frac = t / self.interval - k
        if frac == 0.0:
            return s[k]
        if self._seg_k != k:
            self._seg_k, self._seg_delta = k, s[k + 1] - s[k]
        return s[k] + frac * self._seg_delta

    def positions_now(self) -> np.ndarray:
        if self._pos_time != self.now:
            self._pos = self.positions_at(self.now)
            self._pos_time = self.now
        return self._pos

    def position(self, node: int) -> Position:
        p = self.positions_now()[node]
        return Position(float(p[0]), float(p[1]))

    def speed_estimate(self, node: int) -> float:
        s = self.samples
        if s.shape[0] == 1:
            return 0.0
        k = min(int(self.now // self.interval), s.shape[0] - 2)
        d = s[k + 1, node] - s[k, node]
        return float(math.hypot(d[0], d[1]) / self.interval)

    def location_now(self, node: int) -> LocationRecord:
        return LocationRecord(node, self.position(node), self.now, self.speed_estimate(node))

    # -- traffic ----------------------------------------------------------

    def _app_send(self, flow_idx: int, k: int) -> None:
        flow = self.flows[flow_idx]
        self._uid += 1
        pkt = DataPacket(self._uid, flow.source, flow.destination, self.now, flow.packet_size)
        self.nodes[flow.source].send_data(pkt)
        if k + 1 < flow.packet_count:
            self.schedule(flow.start + (k + 1) * flow.interval, self._app_send, flow_idx, k + 1)

    # -- mac --------------------------------------------------------------

    def send_broadcast(self, node: int, pkt, jitter: float = 0.0) -> None:
        frame = Frame(pkt)
        if jitter > 0:
            self.set_timer(self.mac_rngs[node].uniform(0.0, jitter), self._enqueue, node, frame)
        else:
            self._enqueue(node, frame)

    def send_unicast(self, node: int, target: int, pkt, on_fail) -> None:
        self._enqueue(node, Frame(pkt, target, on_fail))

    def _enqueue(self, node: int, frame: Frame) -> None:
        self._mac_queue[node].append(frame)
        if not self._busy[node]:
            self._next(node)

    def _next(self, node: int) -> None:
        q = self._mac_queue[node]
        self._busy[node] = True
        while q:
            if self._transmit(node, q.popleft()):
                return
        self._busy[node] = False

    def _in_range(self, a: int, b: int) -> bool:
        pos = self.positions_now()
        dx, dy = pos[a] - pos[b]
        r = self.radio.range
        return dx * dx + dy * dy <= r * r

    def _transmit(self, node: int, frame: Frame) -> bool:
        target = frame.target
        if target is not None and not self._in_range(node, target):
            frame.on_fail(frame.packet, target, "out_of_range")
            return False
        if target is not None and self.cfg.contention:
            busy_until = self._medium_busy_until(node)
            if busy_until > self.now:
                # unicast defers to frames already on the air around the sender
                wait = busy_until - self.now + self.mac_rngs[node].uniform(0.0, self.radio.backoff_window)
                self.set_timer(wait, self._retry, node, frame)
                return True
        air = self.radio.airtime(frame.packet.size)
        self._tx_ids += 1
        tx = channel.Transmission(node, frame.packet, self.now, self.now + air, target, self._tx_ids)
        self._horizon = max(self._horizon, 2 * air)
        self._recent.append(tx)
        self.schedule(tx.end, self._tx_end, tx, frame)
        return True

    def _prune(self) -> None:
        recent, cutoff = self._recent, self.now - self._horizon
        while recent and recent[0].start < cutoff:
            recent.popleft()

    def _medium_busy_until(self, node: int) -> float:
        self._prune()
        now, pos, r2 = self.now, self.positions_now(), self.radio.range ** 2
        until = 0.0
        for o in self._recent:
            if o.start <= now < o.end and o.sender != node:
                dx, dy = pos[o.sender] - pos[node]
                if dx * dx + dy * dy <= r2:
                    until = max(until, o.end)
        return until

    def _heard_any(self, receiver: int, frames, pos) -> bool:
        # same rule as channel.collided_at, without numpy overhead for a handful of frames
        r2 = self.radio.range ** 2
        rx, ry = pos[receiver].tolist()
        for o in frames:
            sx, sy = pos[o.sender].tolist()
            if (sx - rx) ** 2 + (sy - ry) ** 2 <= r2:
                return True
        return False

    def _retry(self, node: int, frame: Frame) -> None:
        if not self._transmit(node, frame):
            self._next(node)

    def _tx_end(self, tx: channel.Transmission, frame: Frame) -> None:
        self._prune()
        start, end = tx.start, tx.end
        if self.cfg.contention:
            overlapping = [o for o in self._recent if o.start < end and start < o.end and o is not tx]
        else:
            overlapping = []
        pos = self.positions_now()
        node = tx.sender
        if frame.target is None:
            recs, lost = channel.broadcast(tx, pos, self.radio, overlapping)
            self.counters["collisions"] += len(lost)
            for r in recs:
                self.schedule(r.time, self._deliver, r.receiver, tx.packet)
            self._next(node)
            return

        target = frame.target
        in_range = self._in_range(node, target)
        collided = bool(overlapping) and self._heard_any(target, overlapping, pos)
        if in_range and not collided:
            d = math.hypot(*(pos[target] - pos[node]).tolist())
            self.schedule(tx.end + d * self.radio.propagation_delay, self._deliver, target, tx.packet)
            self._next(node)
            return
        if collided:
            self.counters["collisions"] += 1
        frame.attempts += 1
        if not in_range:
            frame.on_fail(frame.packet, target, "out_of_range")
            self._next(node)
        elif frame.attempts > self.radio.max_unicast_retries:
            frame.on_fail(frame.packet, target, "retries_exhausted")
            self._next(node)
        else:
            backoff = self.mac_rngs[node].uniform(0.0, self.radio.backoff_window)
            self.set_timer(backoff, self._retry, node, frame)

    def _deliver(self, node: int, pkt) -> None:
        self.nodes[node].receive(pkt)


def verify(rep: RunReport) -> None:
    """Raise InvariantError if a finished run's accounting does not add up."""
    terminal = dict(rep.terminal)
    problems = [f"{k} count is {v}" for k, v in terminal.items() if v < 0]
    if sum(terminal.values()) != rep.sent:
        problems.append(f"terminal states sum to {sum(terminal.values())}, sent {rep.sent}")
    if terminal.get("delivered", 0) != rep.received:
        problems.append("delivered count differs from received")
    if not 0.0 <= rep.pdr <= 1.0:
        problems.append(f"pdr {rep.pdr} outside [0, 1]")
    if rep.avg_delay < 0 or (rep.received and rep.avg_delay <= 0):
        problems.append(f"average delay {rep.avg_delay} not positive")
    if rep.protocol_errors:
        problems.append(f"{rep.protocol_errors} malformed packets")
    if problems:
        raise InvariantError(f"scenario {rep.scenario}, {rep.node_count} nodes, seed {rep.seed}: "
                             + "; ".join(problems))


def run(cfg: ScenarioConfig, node_count: int, seed: int, **kw) -> RunReport:
    return Simulation(cfg, node_count, seed, **kw).run()
