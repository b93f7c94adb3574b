"""Manhattan-grid vehicle mobility.

Vehicles live on the centre lines of a rectangular street lattice and pick
straight / left / right at each intersection. Vehicles never interact, so each
one is driven by its own random stream.

Substream derivation (used by both the live engine and `generate_trajectory`):
the run seed feeds ``numpy.random.SeedSequence(seed)``; its first spawned child
is the mobility root, and ``mobility_root.spawn(n)[i]`` seeds vehicle ``i``.
Placement and every later draw for vehicle ``i`` come from that one generator,
so advancing vehicles in any order (or in parallel) yields identical
trajectories.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable

import numpy as np

from larsim.geometry import Position

SNAP_TOL = 1e-6
TRACE_DECIMALS = 6


class Heading(enum.Enum):
    NORTH = (0, 1)
    SOUTH = (0, -1)
    EAST = (1, 0)
    WEST = (-1, 0)

    def __init__(self, dx: int, dy: int):
        # plain attributes: these are read on every mobility step
        self.dx = dx
        self.dy = dy
        self.vertical = dx == 0

    def left(self) -> "Heading":
        return _LEFT[self]

    def right(self) -> "Heading":
        return _RIGHT[self]


_LEFT = {
    Heading.NORTH: Heading.WEST,
    Heading.WEST: Heading.SOUTH,
    Heading.SOUTH: Heading.EAST,
    Heading.EAST: Heading.NORTH,
}
_RIGHT = {v: k for k, v in _LEFT.items()}


class Turn(enum.Enum):
    STRAIGHT = 0
    LEFT = 1
    RIGHT = 2


@dataclass(frozen=True)
class GridSpec:
    area_width: float = 1000.0
    area_height: float = 1000.0
    blocks_x: int = 10
    blocks_y: int = 15

    def __post_init__(self):
        if self.blocks_x < 1 or self.blocks_y < 1:
            raise ValueError("grid needs at least one block along each axis")
        if self.area_width <= 0 or self.area_height <= 0:
            raise ValueError("area dimensions must be positive")

    @cached_property
    def dx(self) -> float:
        return self.area_width / self.blocks_x

    @cached_property
    def dy(self) -> float:
        return self.area_height / self.blocks_y

    def street_x(self, i: int) -> float:
        """x coordinate of vertical street i."""
        return i * self.area_width / self.blocks_x

    def street_y(self, j: int) -> float:
        return j * self.area_height / self.blocks_y

    @property
    def total_street_length(self) -> float:
        return (self.blocks_x + 1) * self.area_height + (self.blocks_y + 1) * self.area_width


@dataclass(frozen=True)
class MobilityParams:
    mean_speed: float = 10.0
    min_speed: float = 10.0
    speed_change_prob: float = 0.25
    turn_prob: float = 0.25
    update_interval: float = 1.0

    def __post_init__(self):
        for name in ("speed_change_prob", "turn_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.mean_speed < 0 or self.min_speed < 0:
            raise ValueError("speeds must be >= 0")
        if self.update_interval <= 0:
            raise ValueError("update_interval must be > 0")

    @property
    def speed_span(self) -> float:
        return max(0.0, 2.0 * (self.mean_speed - self.min_speed))

    @property
    def initial_speed(self) -> float:
        # mean speed, lifted to min_speed when the two disagree
        return max(self.mean_speed, self.min_speed)


@dataclass(frozen=True)
class VehicleState:
    position: Position
    heading: Heading
    speed: float


def _nearest_index(coord: float, spacing: float) -> tuple[int, float]:
    k = round(coord / spacing)
    return k, abs(coord - k * spacing)


def on_street(state: VehicleState, grid: GridSpec, tol: float = SNAP_TOL) -> bool:
    """Check the on-street invariant for a single vehicle."""
    p = state.position
    if not (-tol <= p.x <= grid.area_width + tol and -tol <= p.y <= grid.area_height + tol):
        return False
    if state.heading.vertical:
        return _nearest_index(p.x, grid.dx)[1] <= tol
    return _nearest_index(p.y, grid.dy)[1] <= tol


def legal_headings(x: float, y: float, grid: GridSpec) -> set[Heading]:
    """Headings that do not immediately leave the map from intersection (x, y)."""
    out = set()
    if y < grid.area_height - SNAP_TOL:
        out.add(Heading.NORTH)
    if y > SNAP_TOL:
        out.add(Heading.SOUTH)
    if x < grid.area_width - SNAP_TOL:
        out.add(Heading.EAST)
    if x > SNAP_TOL:
        out.add(Heading.WEST)
    return out


def turn_decision(heading: Heading, legal: set[Heading], turn_prob: float, rng) -> Heading:
    """Draw the new heading at an intersection.

    Straight carries 1 - turn_prob, left and right turn_prob / 2 each; options
    that would leave the map are removed and the rest renormalized.
    """
    options = [
        (heading, 1.0 - turn_prob),
        (heading.left(), turn_prob / 2.0),
        (heading.right(), turn_prob / 2.0),
    ]
    options = [(h, w) for h, w in options if h in legal]
    if not options:
        raise RuntimeError(f"dead end at intersection heading {heading}")
    total = sum(w for _, w in options)
    if total <= 0.0:
        options = [(h, 1.0) for h, _ in options]
        total = float(len(options))
    u = rng.random() * total
    acc = 0.0
    for h, w in options:
        acc += w
        if u < acc:
            return h
    return options[-1][0]


def classify_turn(old: Heading, new: Heading) -> Turn:
    if new == old:
        return Turn.STRAIGHT
    if new == old.left():
        return Turn.LEFT
    if new == old.right():
        return Turn.RIGHT
    raise ValueError(f"{old} -> {new} is a U-turn")


def init_placement(n: int, grid: GridSpec, rng, params: MobilityParams | None = None) -> list[VehicleState]:
    """Place vehicles uniformly by street length.

    `rng` is either one generator shared by all vehicles or a sequence of
    per-vehicle generators (as the simulator uses).
    """
    if n < 1:
        raise ValueError("need at least one vehicle")
    params = params or MobilityParams()
    rngs = rng if isinstance(rng, (list, tuple)) else [rng] * n
    if len(rngs) != n:
        raise ValueError(f"got {len(rngs)} generators for {n} vehicles")
    vertical_len = (grid.blocks_x + 1) * grid.area_height
    out = []
    for g in rngs:
        u = g.random() * grid.total_street_length
        if u < vertical_len:
            i = min(int(u // grid.area_height), grid.blocks_x)
            x, y = grid.street_x(i), u - i * grid.area_height
            heading = Heading.NORTH if g.random() < 0.5 else Heading.SOUTH
        else:
            u -= vertical_len
            j = min(int(u // grid.area_width), grid.blocks_y)
            x, y = u - j * grid.area_width, grid.street_y(j)
            heading = Heading.EAST if g.random() < 0.5 else Heading.WEST
        x = min(max(x, 0.0), grid.area_width)
        y = min(max(y, 0.0), grid.area_height)
        out.append(VehicleState(Position(x, y), heading, params.initial_speed))
    return out


def _next_intersection_gap(x: float, y: float, heading: Heading, grid: GridSpec) -> float:
    """Distance to the next cross street strictly ahead along `heading`."""
    if heading.vertical:
        coord, spacing = y, grid.dy
    else:
        coord, spacing = x, grid.dx
    sign = heading.dx + heading.dy
    k, off = _nearest_index(coord, spacing)
    if off <= SNAP_TOL:
        return spacing
    nxt = math.floor(coord / spacing) + (1 if sign > 0 else 0)
    return abs(nxt * spacing - coord)


def _snap(coord: float, spacing: float) -> float:
    k, off = _nearest_index(coord, spacing)
    return k * spacing if off <= SNAP_TOL else coord


def advance(
    state: VehicleState,
    dt: float,
    params: MobilityParams,
    grid: GridSpec,
    rng,
    on_decision=None,
) -> VehicleState:
    """Move one vehicle for `dt` seconds, turning at every intersection it reaches.

    `on_decision(old_heading, new_heading, legal)` is called for each
    intersection decision when given; tests use it to tally turn frequencies.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    x, y = state.position.x, state.position.y
    heading = state.heading
    remaining = state.speed * dt
    # a vehicle sitting at the map edge facing outward must turn before moving
    if remaining > 0:
        heading = _ensure_legal(x, y, heading, params, grid, rng, on_decision)
    while remaining > SNAP_TOL:
        gap = _next_intersection_gap(x, y, heading, grid)
        if remaining < gap - SNAP_TOL:
            x += heading.dx * remaining
            y += heading.dy * remaining
            remaining = 0.0
            break
        x = _snap(x + heading.dx * gap, grid.dx)
        y = _snap(y + heading.dy * gap, grid.dy)
        remaining -= gap
        legal = legal_headings(x, y, grid)
        new = turn_decision(heading, legal, params.turn_prob, rng)
        if on_decision is not None:
            on_decision(heading, new, legal)
        heading = new
    x = min(max(x, 0.0), grid.area_width)
    y = min(max(y, 0.0), grid.area_height)
    # re-pin the cross coordinate to the street line against float drift
    if heading.vertical:
        x = _snap(x, grid.dx)
    else:
        y = _snap(y, grid.dy)
    return VehicleState(Position(x, y), heading, state.speed)


def _ensure_legal(x, y, heading, params, grid, rng, on_decision):
    at_x = _nearest_index(x, grid.dx)[1] <= SNAP_TOL
    at_y = _nearest_index(y, grid.dy)[1] <= SNAP_TOL
    legal = legal_headings(x, y, grid)
    if heading in legal:
        return heading
    if not (at_x and at_y):
        # mid-block at an outer edge facing out is impossible; flip along street
        return _LEFT[_LEFT[heading]]
    new = turn_decision(heading, legal, params.turn_prob, rng)
    if on_decision is not None:
        on_decision(heading, new, legal)
    return new


def maybe_update_speed(state: VehicleState, params: MobilityParams, rng) -> VehicleState:
    """With probability speed_change_prob, redraw speed from [min, min + span]."""
    if params.speed_change_prob > 0 and rng.random() < params.speed_change_prob:
        speed = params.min_speed + rng.random() * params.speed_span
        return replace(state, speed=max(speed, params.min_speed))
    return state


def vehicle_streams(seed: int, n: int) -> list[np.random.Generator]:
    mobility_root = np.random.SeedSequence(seed).spawn(3)[0]
    return [np.random.default_rng(s) for s in mobility_root.spawn(n)]


def quantize(v: float) -> float:
    """Round to the trace precision so live and replayed positions agree exactly."""
    return float(f"{v:.{TRACE_DECIMALS}f}")


def generate_trajectory(
    n: int,
    duration: float,
    params: MobilityParams,
    grid: GridSpec,
    seed: int,
    check_invariants: bool = False,
) -> np.ndarray:
    """Sample every vehicle at multiples of `params.update_interval` over [0, duration].

    Returns an array of shape (samples, n, 2) with positions rounded to the
    trace precision.
    """
    steps = int(math.ceil(duration / params.update_interval - 1e-9))
    rngs = vehicle_streams(seed, n)
    states = init_placement(n, grid, rngs, params)
    out = np.empty((steps + 1, n, 2))
    for i, s in enumerate(states):
        out[0, i] = quantize(s.position.x), quantize(s.position.y)
    for i, g in enumerate(rngs):
        s = states[i]
        for k in range(1, steps + 1):
            s = advance(s, params.update_interval, params, grid, g)
            s = maybe_update_speed(s, params, g)
            if check_invariants and not (on_street(s, grid) and s.speed >= params.min_speed):
                raise AssertionError(f"vehicle {i} left the street lattice at step {k}: {s}")
            out[k, i, 0] = quantize(s.position.x)
            out[k, i, 1] = quantize(s.position.y)
    return out


def export_trace(samples: np.ndarray, interval: float = 1.0) -> str:
    """Render (samples, n, 2) positions as ``node time x y`` lines."""
    buf = io.StringIO()
    n_samples, n = samples.shape[:2]
    for node in range(n):
        for k in range(n_samples):
            x, y = samples[k, node]
            buf.write(f"{node} {k * interval:.6f} {x:.6f} {y:.6f}\n")
    return buf.getvalue()


class TraceError(ValueError):
    pass


def import_trace(lines: Iterable[str] | str, expected_nodes: int | None = None) -> tuple[np.ndarray, float]:
    """Parse a trace back into a (samples, n, 2) array and its sampling interval."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    per_node: dict[int, list[tuple[float, float, float]]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise TraceError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            node = int(parts[0])
            t, x, y = (float(p) for p in parts[1:])
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
        per_node.setdefault(node, []).append((t, x, y))
    if not per_node:
        raise TraceError("empty trace")
    nodes = sorted(per_node)
    if nodes != list(range(len(nodes))):
        raise TraceError("node ids must be 0..n-1")
    if expected_nodes is not None and len(nodes) != expected_nodes:
        raise TraceError(f"trace has {len(nodes)} nodes, config expects {expected_nodes}")
    counts = {len(v) for v in per_node.values()}
    if len(counts) != 1:
        raise TraceError("nodes have differing sample counts")
    n_samples = counts.pop()
    times = np.array([t for t, _, _ in per_node[0]])
    interval = float(times[1] - times[0]) if n_samples > 1 else 1.0
    out = np.empty((n_samples, len(nodes), 2))
    for node in nodes:
        rows = per_node[node]
        ts = np.array([r[0] for r in rows])
        if not np.allclose(ts, times, atol=1e-6):
            raise TraceError(f"node {node} is sampled at different times")
        out[:, node, 0] = [r[1] for r in rows]
        out[:, node, 1] = [r[2] for r in rows]
    if n_samples > 1 and not np.allclose(np.diff(times), interval, atol=1e-6):
        raise TraceError("trace is not uniformly sampled")
    return out, interval
