import collections

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from larsim.geometry import Position
from larsim.mobility import (
    GridSpec,
    Heading,
    MobilityParams,
    TraceError,
    Turn,
    VehicleState,
    advance,
    classify_turn,
    export_trace,
    generate_trajectory,
    import_trace,
    init_placement,
    legal_headings,
    maybe_update_speed,
    on_street,
    turn_decision,
)

CITY_GRID = GridSpec()


def test_grid_lattice():
    g = CITY_GRID
    assert g.street_x(10) == 1000 and g.street_y(15) == 1000
    assert g.dx == 100 and g.dy == pytest.approx(1000 / 15)
    with pytest.raises(ValueError):
        GridSpec(blocks_x=0)


def test_placement_on_street():
    rng = np.random.default_rng(0)
    states = init_placement(25, CITY_GRID, rng)
    assert len(states) == 25
    assert all(on_street(s, CITY_GRID) for s in states)


def test_placement_degenerate_grid():
    g = GridSpec(100, 100, 1, 1)
    (s,) = init_placement(1, g, np.random.default_rng(3))
    x, y = s.position.x, s.position.y
    assert x in (0, 100) or y in (0, 100)
    assert on_street(s, g)


def test_placement_rejects_zero():
    with pytest.raises(ValueError):
        init_placement(0, CITY_GRID, np.random.default_rng(0))


def test_placement_initial_speed_respects_min():
    params = MobilityParams(mean_speed=10, min_speed=20)
    (s,) = init_placement(1, CITY_GRID, np.random.default_rng(0), params)
    assert s.speed == 20


def test_placement_proportional_to_street_length():
    # uneven area so vertical and horizontal streets differ in length
    g = GridSpec(2000, 500, 4, 3)
    states = init_placement(10_000, g, np.random.default_rng(11))
    counts = collections.Counter()
    for s in states:
        if s.heading.vertical:
            counts[("v", round(s.position.x / g.dx))] += 1
        else:
            counts[("h", round(s.position.y / g.dy))] += 1
    keys = [("v", i) for i in range(g.blocks_x + 1)] + [("h", j) for j in range(g.blocks_y + 1)]
    lengths = np.array([g.area_height if k[0] == "v" else g.area_width for k in keys])
    expected = 10_000 * lengths / lengths.sum()
    observed = np.array([counts[k] for k in keys])
    chi2, p = stats.chisquare(observed, expected)
    assert p > 1e-3
    # and per street within 3 sigma of its binomial expectation
    sigma = np.sqrt(expected * (1 - lengths / lengths.sum()))
    assert np.all(np.abs(observed - expected) <= 3 * sigma + 1)


def test_advance_mid_block():
    params = MobilityParams(turn_prob=0.5)
    s = VehicleState(Position(150, 200), Heading.EAST, 10)
    out = advance(s, 1.0, params, CITY_GRID, np.random.default_rng(0))
    assert out.position == Position(160, 200)
    assert out.heading is Heading.EAST


def test_advance_turn_prob_zero_keeps_heading():
    params = MobilityParams(turn_prob=0.0)
    rng = np.random.default_rng(5)
    decisions = []
    (s,) = init_placement(1, CITY_GRID, rng, params)
    for _ in range(1000):
        s = advance(s, 1.0, params, CITY_GRID, rng, on_decision=lambda *d: decisions.append(d))
    assert decisions
    for old, new, legal in decisions:
        if old in legal:
            assert new is old
        else:
            assert new in legal


def test_corner_forces_single_turn():
    legal = legal_headings(1000, 0, CITY_GRID)
    assert legal == {Heading.NORTH, Heading.WEST}
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert turn_decision(Heading.EAST, legal, 0.5, rng) is Heading.NORTH


def test_boundary_renormalizes_over_turns():
    legal = legal_headings(1000, 500, CITY_GRID)  # east edge, interior y
    rng = np.random.default_rng(1)
    picks = collections.Counter(turn_decision(Heading.EAST, legal, 0.5, rng) for _ in range(20_000))
    assert set(picks) == {Heading.NORTH, Heading.SOUTH}
    assert abs(picks[Heading.NORTH] / 20_000 - 0.5) < 0.02


def test_boundary_with_zero_turn_prob_still_turns():
    legal = legal_headings(1000, 500, CITY_GRID)
    h = turn_decision(Heading.EAST, legal, 0.0, np.random.default_rng(0))
    assert h in (Heading.NORTH, Heading.SOUTH)


@pytest.mark.parametrize("turn_prob", [0.25, 0.5, 0.75])
def test_turn_frequencies(turn_prob):
    rng = np.random.default_rng(int(turn_prob * 100))
    legal = set(Heading)
    n = 100_000
    tally = collections.Counter(
        classify_turn(Heading.NORTH, turn_decision(Heading.NORTH, legal, turn_prob, rng)) for _ in range(n)
    )
    assert abs(tally[Turn.STRAIGHT] / n - (1 - turn_prob)) <= 0.01
    assert abs(tally[Turn.LEFT] / n - turn_prob / 2) <= 0.01
    assert abs(tally[Turn.RIGHT] / n - turn_prob / 2) <= 0.01


def test_speed_change_prob_zero():
    params = MobilityParams(mean_speed=10, min_speed=5, speed_change_prob=0)
    s = VehicleState(Position(0, 0), Heading.NORTH, 7.5)
    rng = np.random.default_rng(0)
    for _ in range(100):
        s = maybe_update_speed(s, params, rng)
    assert s.speed == 7.5


@pytest.mark.parametrize("vmin, vmean", [(10, 10), (20, 10), (30, 10)])
def test_speed_constant_when_span_is_zero(vmin, vmean):
    params = MobilityParams(mean_speed=vmean, min_speed=vmin, speed_change_prob=1.0)
    s = VehicleState(Position(0, 0), Heading.NORTH, params.initial_speed)
    rng = np.random.default_rng(0)
    for _ in range(100):
        s = maybe_update_speed(s, params, rng)
        assert s.speed == vmin


def test_resampled_speed_mean():
    params = MobilityParams(mean_speed=10, min_speed=5, speed_change_prob=1.0)
    rng = np.random.default_rng(42)
    s = VehicleState(Position(0, 0), Heading.NORTH, 10)
    speeds = []
    for _ in range(100_000):
        s = maybe_update_speed(s, params, rng)
        speeds.append(s.speed)
    assert abs(np.mean(speeds) - 10) <= 0.1
    assert min(speeds) >= 5


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]),
    st.floats(0.5, 40),
    st.integers(1, 6),
    st.integers(1, 6),
)
def test_advance_preserves_invariants(seed, turn_prob, speed, bx, by):
    g = GridSpec(600, 400, bx, by)
    params = MobilityParams(mean_speed=speed, min_speed=speed, turn_prob=turn_prob)
    rng = np.random.default_rng(seed)
    (s,) = init_placement(1, g, rng, params)
    for _ in range(200):
        s = advance(s, 1.0, params, g, rng)
        s = maybe_update_speed(s, params, rng)
        assert on_street(s, g), s
        assert s.speed >= params.min_speed


def test_advance_step_covers_speed_times_dt_in_manhattan_distance():
    params = MobilityParams(turn_prob=0.5)
    rng = np.random.default_rng(9)
    (s,) = init_placement(1, CITY_GRID, rng, params)
    for _ in range(200):
        new = advance(s, 1.0, params, CITY_GRID, rng)
        manhattan = abs(new.position.x - s.position.x) + abs(new.position.y - s.position.y)
        # turning or bouncing at the edge can only shorten the straight-line displacement
        assert manhattan <= s.speed * 1.0 + 1e-6
        s = new


def test_trajectory_is_deterministic():
    params = MobilityParams(turn_prob=0.5, speed_change_prob=0.5, min_speed=5)
    a = generate_trajectory(10, 50, params, CITY_GRID, seed=4)
    b = generate_trajectory(10, 50, params, CITY_GRID, seed=4)
    c = generate_trajectory(10, 50, params, CITY_GRID, seed=5)
    assert a.shape == (51, 10, 2)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_trajectory_prefix_independent_of_fleet_size():
    # vehicle i's stream does not depend on how many other vehicles exist
    params = MobilityParams()
    a = generate_trajectory(5, 20, params, CITY_GRID, seed=8)
    b = generate_trajectory(8, 20, params, CITY_GRID, seed=8)
    assert np.array_equal(a, b[:, :5])


def test_export_format():
    samples = np.array([[[1.0, 2.0]]])
    assert export_trace(samples) == "0 0.000000 1.000000 2.000000\n"


def test_trace_round_trip():
    samples = generate_trajectory(25, 30, MobilityParams(), CITY_GRID, seed=1)
    text = export_trace(samples)
    assert len(text.splitlines()) == 25 * 31
    back, interval = import_trace(text, expected_nodes=25)
    assert interval == 1.0
    assert np.array_equal(back, samples)


def test_trace_errors():
    good = "0 0.0 1.0 2.0\n0 1.0 1.0 3.0\n"
    with pytest.raises(TraceError, match="line 2"):
        import_trace("0 0.0 1.0 2.0\n0 1.0 1.0\n")
    with pytest.raises(TraceError, match="line 1"):
        import_trace("x 0.0 1.0 2.0\n")
    with pytest.raises(TraceError, match="expects 3"):
        import_trace(good, expected_nodes=3)
    with pytest.raises(TraceError):
        import_trace("")
