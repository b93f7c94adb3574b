import itertools

import numpy as np
import pytest

from larsim.metrics import MetricsAccumulator, RunReport, aggregate, avg_delay, pdr


def acc_with(sent, delays):
    acc = MetricsAccumulator()
    for i in range(sent):
        acc.on_send(i, 0.0)
    for i, d in enumerate(delays):
        acc.on_deliver(i, d)
    return acc


def test_pdr_examples():
    assert pdr(acc_with(100, [0.1] * 87)) == 0.87
    assert pdr(acc_with(5, [1] * 5)) == 1.0
    assert pdr(MetricsAccumulator()) == 0.0


def test_pdr_under_random_loss():
    rng = np.random.default_rng(0)
    acc = MetricsAccumulator()
    for i in range(10_000):
        acc.on_send(i, 0.0)
        if rng.random() >= 0.2:
            acc.on_deliver(i, 0.01)
    assert abs(pdr(acc) - 0.8) <= 0.02


def test_avg_delay_examples():
    assert avg_delay(acc_with(3, [1, 2, 3])) == 2
    assert avg_delay(acc_with(1, [0.25])) == 0.25
    # undelivered packets do not enter the mean
    assert avg_delay(acc_with(10, [1, 3])) == 2
    assert avg_delay(acc_with(4, [])) == 0.0


def test_delivery_bookkeeping():
    acc = MetricsAccumulator()
    acc.on_send("a", 1.0)
    with pytest.raises(RuntimeError):
        acc.on_deliver("a", 1.0)
    acc.on_deliver("a", 1.5)
    with pytest.raises(RuntimeError):
        acc.on_deliver("a", 2.0)
    with pytest.raises(ValueError):
        acc.on_drop("a", "vanished")


def test_terminal_counts_sum_to_sent():
    acc = acc_with(10, [0.1, 0.2])
    acc.on_drop(5, "dropped_queue")
    acc.on_drop(6, "dropped_no_route")
    counts = acc.terminal_counts()
    assert sum(counts.values()) == 10
    assert counts["in_flight_at_end"] == 6


def rep(seed, p, d, nodes=25):
    return RunReport("1", nodes, seed, p, d, 100, int(p * 100))


def test_aggregate_examples():
    s = aggregate([rep(1, 0.9, 1.0), rep(2, 1.0, 3.0)])
    assert s.pdr_mean == pytest.approx(0.95)
    assert s.delay_mean == 2.0
    assert s.pdr_min == 0.9 and s.pdr_max == 1.0
    one = aggregate([rep(1, 0.5, 0.1)])
    assert (one.pdr_mean, one.delay_mean, one.pdr_std) == (0.5, 0.1, 0.0)


def test_aggregate_permutation_invariant():
    reports = [rep(i, p, d) for i, (p, d) in enumerate([(0.1, 3.0), (0.7, 0.2), (0.33, 1.1), (0.9, 0.05)])]
    results = {aggregate(list(perm)) for perm in itertools.permutations(reports)}
    assert len(results) == 1


def test_aggregate_rejects_bad_input():
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([rep(1, 0.5, 1.0, nodes=25), rep(2, 0.5, 1.0, nodes=50)])
