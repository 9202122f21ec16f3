import math

import numpy as np
import pytest

from crlab.allocation import (brute_force_allocation, channel_condition,
                              expected_competitive_ratio, greedy_select,
                              heuristic1, heuristic2)
from crlab.errors import CapacityLimitError


def modular_evaluator(weights):
    """Objective that just sums per-pair weights (no interaction)."""
    def phi(b):
        return float((b * weights).sum())
    return phi


def test_greedy_single_channel_takes_all_users():
    weights = np.array([[1.0], [2.0], [3.0]])
    result = greedy_select([0], 3, modular_evaluator(weights), max_per_channel=4)
    assert result.allocation.sum() == 3
    assert result.objective == pytest.approx(6.0)
    best = brute_force_allocation([0], 3, modular_evaluator(weights), max_per_channel=4)
    assert best.objective == pytest.approx(result.objective)


def test_greedy_respects_sender_limit():
    weights = np.array([[5.0], [4.0], [3.0]])
    result = greedy_select([0], 3, modular_evaluator(weights), max_per_channel=2)
    assert result.allocation.sum() == 2
    assert result.sequence == [(0, 0), (1, 0)]


def test_greedy_ties_break_lexicographically():
    weights = np.ones((2, 2))
    result = greedy_select([0, 1], 2, modular_evaluator(weights), max_per_channel=1)
    assert result.sequence[0] == (0, 0)
    assert result.sequence[1] == (1, 1)


def test_greedy_marginal_gains_sum_to_grow_objective():
    rng = np.random.default_rng(0)
    weights = rng.uniform(0.1, 2.0, (4, 3))
    result = greedy_select([0, 1, 2], 4, modular_evaluator(weights), max_per_channel=2)
    assert math.fsum(result.marginal_gains) == pytest.approx(result.grow_objective, abs=1e-9)
    assert result.objective >= result.grow_objective - 1e-12


def test_greedy_skips_failing_pairs():
    def flaky(b):
        if b[0, 0]:
            raise RuntimeError("bad pair")
        return float(b.sum())
    with pytest.warns(UserWarning):
        result = greedy_select([0, 1], 2, flaky, max_per_channel=2)
    assert result.allocation[0, 0] == 0
    assert result.allocation.sum() == 2  # user 0 lands on channel 1 instead


def test_brute_force_guards():
    phi = modular_evaluator(np.ones((7, 2)))
    with pytest.raises(CapacityLimitError):
        brute_force_allocation([0, 1], 7, phi, max_per_channel=2)
    with pytest.raises(CapacityLimitError):
        brute_force_allocation([0, 1, 2, 3, 4], 2,
                               modular_evaluator(np.ones((2, 5))), max_per_channel=2)


def test_brute_force_single_user_best_channel():
    weights = np.array([[1.0, 5.0, 2.0]])
    best = brute_force_allocation([0, 1, 2], 1, modular_evaluator(weights),
                                  max_per_channel=3)
    assert best.allocation[0, 1] == 1
    assert best.objective == pytest.approx(5.0)


def test_greedy_ratio_bound_on_submodular_instances():
    # diminishing-returns objective: sqrt of per-channel load value
    rng = np.random.default_rng(42)
    for _ in range(10):
        n, m = int(rng.integers(2, 5)), int(rng.integers(1, 4))
        weights = rng.uniform(0.1, 3.0, (n, m))

        def phi(b, w=weights):
            return float(sum(math.sqrt((b[:, c] * w[:, c]).sum())
                             for c in range(w.shape[1])))

        available = list(range(m))
        greedy = greedy_select(available, n, phi, max_per_channel=3)
        best = brute_force_allocation(available, n, phi, max_per_channel=3)
        assert greedy.objective <= best.objective + 1e-12
        assert greedy.objective >= best.objective / len(available) - 1e-12


def test_expected_ratio_reference_values():
    assert expected_competitive_ratio(0.95, 6) == pytest.approx(0.983, abs=5e-4)
    assert expected_competitive_ratio(0.6, 6) == pytest.approx(0.5236, abs=5e-5)
    assert expected_competitive_ratio(1.0, 6) == 1.0
    assert expected_competitive_ratio(0.0, 4) == pytest.approx(0.25)


def test_expected_ratio_monte_carlo():
    rng = np.random.default_rng(9)
    eta, m = 0.6, 6
    avail = rng.binomial(m, 1 - eta, size=200_000)
    draws = np.where(avail == 0, 1.0, 1.0 / np.maximum(avail, 1))
    assert expected_competitive_ratio(eta, m) == pytest.approx(draws.mean(), abs=2e-3)


def test_heuristic1_single_user_full_slot():
    metric = np.array([[1.0, 3.0]])
    sched = heuristic1([0, 1], metric)
    assert sched == [type(sched[0])(user=0, channel=1, share=1.0)]


def test_heuristic1_shared_channel_splits_slot():
    metric = np.array([[1.0, 5.0], [2.0, 6.0]])
    sched = heuristic1([0, 1], metric)
    assert all(e.channel == 1 and e.share == pytest.approx(0.5) for e in sched)


def test_heuristic2_serves_each_channel_once():
    rng = np.random.default_rng(1)
    metric = rng.uniform(0, 1, (5, 3))
    sched = heuristic2([0, 1, 2], metric)
    assert len(sched) == 3
    assert len({e.channel for e in sched}) == 3
    assert len({e.user for e in sched}) == 3
    assert all(e.share == 1.0 for e in sched)


def test_heuristics_agree_single_user_single_channel():
    metric = np.array([[2.0]])
    assert heuristic1([0], metric) == heuristic2([0], metric)


def test_channel_condition():
    gains = np.arange(12, dtype=float).reshape(2, 3, 2)
    metric = channel_condition(gains)
    assert metric.shape == (3, 2)
    assert metric[0, 0] == pytest.approx(0.0 ** 2 + 6.0 ** 2)
