"""Scenario configuration: presets for the three city scenarios and a key=value file format.

Example file::

    # scenario 2, two densities, quick runs
    scenario = 2
    nodes = 25, 150
    seeds = 3
    sim_time = 300
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from larsim.channel import RadioParams
from larsim.mobility import GridSpec, MobilityParams

DEFAULT_NODE_COUNTS = (25, 50, 75, 100, 125, 150)

# (speed_change_prob, min_speed, turn_prob) per city scenario
SCENARIO_ROWS = {
    "1": (0.25, 10.0, 0.25),
    "2": (0.5, 20.0, 0.5),
    "3": (0.75, 30.0, 0.75),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "custom"
    # grid
    area_width: float = 1000.0
    area_height: float = 1000.0
    blocks_x: int = 10
    blocks_y: int = 15
    # mobility
    mean_speed: float = 10.0
    min_speed: float = 10.0
    speed_change_prob: float = 0.25
    turn_prob: float = 0.25
    update_interval: float = 1.0
    # radio / mac
    radio_range: float = 250.0
    bitrate: float = 2e6
    propagation_delay: float = 3.336e-9
    max_unicast_retries: int = 3
    backoff_window: float = 5e-3
    contention: bool = True
    # traffic
    packet_size: int = 512
    n_flows: int = 10
    cbr_interval: float = 0.25
    warmup: float = 10.0
    # routing
    discovery_timeout: float = 1.0
    max_discovery_attempts: int = 2
    queue_limit: int = 64
    fallback_flood: bool = True
    rreq_jitter: float = 10e-3
    # experiment
    sim_time: float = 1000.0
    node_counts: tuple = DEFAULT_NODE_COUNTS
    seeds: tuple = tuple(range(1, 11))

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            self.grid()
            self.mobility()
            self.radio()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.sim_time <= 2 * self.warmup:
            raise ConfigError("sim_time must exceed twice the warm-up")
        if self.packet_size <= 0 or self.cbr_interval <= 0:
            raise ConfigError("packet_size and cbr_interval must be positive")
        if self.n_flows < 0:
            raise ConfigError("flows must be >= 0")
        if self.discovery_timeout <= 0 or self.max_discovery_attempts < 1:
            raise ConfigError("discovery_timeout must be > 0 and attempts >= 1")
        if self.queue_limit < 1:
            raise ConfigError("queue_limit must be >= 1")
        if self.rreq_jitter < 0:
            raise ConfigError("rreq_jitter must be >= 0")
        if not self.node_counts or any(n < 1 for n in self.node_counts):
            raise ConfigError("node counts must be positive")
        if not self.seeds:
            raise ConfigError("need at least one seed")

    def grid(self) -> GridSpec:
        return GridSpec(self.area_width, self.area_height, self.blocks_x, self.blocks_y)

    def mobility(self) -> MobilityParams:
        return MobilityParams(
            self.mean_speed, self.min_speed, self.speed_change_prob, self.turn_prob,
            self.update_interval,
        )

    def radio(self) -> RadioParams:
        return RadioParams(
            self.radio_range, self.bitrate, self.propagation_delay,
            self.max_unicast_retries, self.backoff_window,
        )

    def with_overrides(self, **kw) -> "ScenarioConfig":
        try:
            return replace(self, **kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def preset(scenario: str | int) -> ScenarioConfig:
    """The full experiment matrix for city scenario 1, 2 or 3."""
    key = str(scenario)
    if key not in SCENARIO_ROWS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected 1, 2, 3 or custom")
    change, vmin, turn = SCENARIO_ROWS[key]
    return ScenarioConfig(
        scenario=key, speed_change_prob=change, min_speed=vmin, turn_prob=turn,
    )


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int_list(s: str) -> tuple:
    return tuple(int(p) for p in s.replace(",", " ").split())


# file key -> (dataclass field, parser)
KEYS = {
    "area_width": ("area_width", float),
    "area_height": ("area_height", float),
    "blocks_x": ("blocks_x", int),
    "blocks_y": ("blocks_y", int),
    "mean_speed": ("mean_speed", float),
    "min_speed": ("min_speed", float),
    "speed_change_probability": ("speed_change_prob", float),
    "turn_probability": ("turn_prob", float),
    "update_interval": ("update_interval", float),
    "range": ("radio_range", float),
    "bitrate": ("bitrate", float),
    "propagation_delay": ("propagation_delay", float),
    "max_retries": ("max_unicast_retries", int),
    "backoff_window": ("backoff_window", float),
    "contention": ("contention", _bool),
    "packet_size": ("packet_size", int),
    "flows": ("n_flows", int),
    "cbr_interval": ("cbr_interval", float),
    "warmup": ("warmup", float),
    "discovery_timeout": ("discovery_timeout", float),
    "discovery_attempts": ("max_discovery_attempts", int),
    "queue_limit": ("queue_limit", int),
    "fallback": ("fallback_flood", _bool),
    "rreq_jitter": ("rreq_jitter", float),
    "sim_time": ("sim_time", float),
    "nodes": ("node_counts", _int_list),
}


def seed_range(count: int, base: int = 1) -> tuple:
    if count < 1:
        raise ConfigError("seeds must be >= 1")
    return tuple(range(base, base + count))


def parse_config(text: str) -> ScenarioConfig:
    """Parse ``key = value`` lines; the scenario preset is applied before any override."""
    entries: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS and key not in ("scenario", "seeds", "seed_base"):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (lineno, value)

    cfg = ScenarioConfig()
    if "scenario" in entries:
        lineno, value = entries.pop("scenario")
        if value != "custom":
            try:
                cfg = preset(value)
            except ConfigError as exc:
                raise ConfigError(f"line {lineno}: key 'scenario': {exc}") from None

    overrides = {}
    for key, (lineno, value) in entries.items():
        if key in ("seeds", "seed_base"):
            continue
        name, parse = KEYS[key]
        try:
            overrides[name] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: key {key!r}: cannot parse {value!r} ({exc})") from None
    if "seeds" in entries or "seed_base" in entries:
        try:
            count = int(entries["seeds"][1]) if "seeds" in entries else len(cfg.seeds)
            base = int(entries["seed_base"][1]) if "seed_base" in entries else 1
            overrides["seeds"] = seed_range(count, base)
        except ValueError as exc:
            lineno = entries.get("seeds", entries.get("seed_base"))[0]
            raise ConfigError(f"line {lineno}: key 'seeds': {exc}") from None

    # validate one override at a time so the error names its line and key
    for name, value in overrides.items():
        key = next(k for k, (f, _) in KEYS.items() if f == name) if name != "seeds" else "seeds"
        lineno = entries[key][0] if key in entries else entries.get("seed_base", (0,))[0]
        try:
            replace(cfg, **{name: value})
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: key {key!r}: {exc}") from None
    try:
        return replace(cfg, **overrides)
    except ConfigError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def to_text(cfg: ScenarioConfig) -> str:
    """Serialize a config back into the key=value format with every key explicit."""
    inverse = {f: k for k, (f, _) in KEYS.items()}
    lines = [f"scenario = {cfg.scenario}"]
    for f in fields(cfg):
        if f.name in ("scenario", "seeds"):
            continue
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{inverse[f.name]} = {v}")
    seeds = cfg.seeds
    if seeds != seed_range(len(seeds), seeds[0]):
        raise ConfigError("only contiguous seed ranges can be written out")
    lines += [f"seeds = {len(seeds)}", f"seed_base = {seeds[0]}"]
    return "\n".join(lines) + "\n"
