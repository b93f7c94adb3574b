import pytest

from larsim.config import (
    DEFAULT_NODE_COUNTS,
    ConfigError,
    ScenarioConfig,
    parse_config,
    preset,
    to_text,
)


@pytest.mark.parametrize(
    "scenario, row", [("1", (0.25, 10, 0.25)), ("2", (0.5, 20, 0.5)), ("3", (0.75, 30, 0.75))]
)
def test_presets_expand_tables(scenario, row):
    cfg = parse_config(f"scenario={scenario}")
    assert (cfg.speed_change_prob, cfg.min_speed, cfg.turn_prob) == row
    assert (cfg.area_width, cfg.area_height) == (1000, 1000)
    assert (cfg.blocks_x, cfg.blocks_y) == (10, 15)
    assert cfg.radio_range == 250
    assert cfg.packet_size == 512
    assert cfg.sim_time == 1000
    assert cfg.mean_speed == 10
    assert cfg.node_counts == DEFAULT_NODE_COUNTS == (25, 50, 75, 100, 125, 150)
    assert len(cfg.seeds) == 10
    assert cfg == preset(scenario)


def test_override_after_preset_regardless_of_order():
    a = parse_config("nodes=25\nscenario=1")
    b = parse_config("scenario=1\nnodes=25")
    assert a == b
    assert a.node_counts == (25,)
    assert a.turn_prob == 0.25


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\nscenario = 2  # city two\nseeds = 3\n")
    assert cfg.scenario == "2" and cfg.seeds == (1, 2, 3)


def test_seed_base():
    assert parse_config("seeds=2\nseed_base=7").seeds == (7, 8)


def test_out_of_range_probability_names_line_and_key():
    with pytest.raises(ConfigError, match=r"line 2: key 'turn_probability'.*\[0, 1\]"):
        parse_config("scenario=1\nturn_probability=1.5")


@pytest.mark.parametrize(
    "text, pattern",
    [
        ("colour=blue", "line 1: unknown key 'colour'"),
        ("scenario=1\nsim_time=soon", "line 2: key 'sim_time'"),
        ("scenario=9", "line 1: key 'scenario'"),
        ("just words", "line 1: expected key=value"),
        ("flows=1\nflows=2", "line 2: duplicate key"),
        ("contention=maybe", "line 1: key 'contention'"),
    ],
)
def test_parse_errors(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


def test_parse_is_pure():
    text = "scenario=3\nnodes=25, 75\nsim_time=300"
    assert parse_config(text) == parse_config(text)


def test_text_round_trip():
    cfg = preset(2).with_overrides(node_counts=(25, 150), sim_time=300.0, contention=False)
    assert parse_config(to_text(cfg)) == cfg


def test_direct_construction_validates():
    with pytest.raises(ConfigError):
        ScenarioConfig(speed_change_prob=-0.1)
    with pytest.raises(ConfigError):
        ScenarioConfig(node_counts=())
