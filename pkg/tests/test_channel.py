import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crlab.channel import (ChannelState, FadingModel, MarkovChannelModel,
                           gain_ccdf, stationary_idle_prob, step_channel)
from crlab.errors import DegenerateChainError


def test_stationary_reference_values():
    assert stationary_idle_prob(MarkovChannelModel.from_rates(0.7, 0.2)) == pytest.approx(0.4)
    assert MarkovChannelModel.from_rates(0.7, 0.2).eta == pytest.approx(0.6)
    assert stationary_idle_prob(MarkovChannelModel.from_rates(0.5, 0.5)) == pytest.approx(0.5)
    # alternating chain: idle flips to busy and back every slot
    assert stationary_idle_prob(MarkovChannelModel.from_rates(0.0, 1.0)) == pytest.approx(0.5)


def test_degenerate_chain_rejected():
    with pytest.raises(DegenerateChainError):
        MarkovChannelModel.from_rates(1.0, 0.0)


def test_eta_consistency_enforced():
    MarkovChannelModel(lam=0.7, mu=0.2, eta=0.6)
    with pytest.raises(ValueError):
        MarkovChannelModel(lam=0.7, mu=0.2, eta=0.5)
    with pytest.raises(ValueError):
        MarkovChannelModel(lam=1.2, mu=0.2)


def test_from_utilization_reproduces_reference_rates():
    m = MarkovChannelModel.from_utilization(0.6, switching=0.5)
    assert m.lam == pytest.approx(0.7)
    assert m.mu == pytest.approx(0.2)
    assert m.eta == pytest.approx(0.6)


def test_step_rules():
    m = MarkovChannelModel.from_rates(0.7, 0.2)
    idle, busy = ChannelState(False), ChannelState(True)
    assert not step_channel(idle, m, 0.69).occupied   # draw < lam stays idle
    assert step_channel(idle, m, 0.71).occupied
    assert not step_channel(busy, m, 0.19).occupied   # draw < mu frees the channel
    assert step_channel(busy, m, 0.21).occupied


def test_long_run_busy_frequency_matches_eta():
    m = MarkovChannelModel.from_rates(0.7, 0.2)
    rng = np.random.default_rng(42)
    draws = rng.random(1_000_000)
    state = ChannelState(False)
    busy = 0
    for u in draws:
        state = step_channel(state, m, u)
        busy += state.occupied
    assert busy / len(draws) == pytest.approx(m.eta, abs=0.005)


def test_transition_frequencies_within_3_sigma():
    m = MarkovChannelModel.from_rates(0.7, 0.2)
    rng = np.random.default_rng(7)
    draws = rng.random(200_000)
    state = ChannelState(False)
    from_idle = from_busy = idle_to_idle = busy_to_idle = 0
    for u in draws:
        nxt = step_channel(state, m, u)
        if state.occupied:
            from_busy += 1
            busy_to_idle += not nxt.occupied
        else:
            from_idle += 1
            idle_to_idle += not nxt.occupied
        state = nxt
    for count, total, p in ((idle_to_idle, from_idle, m.lam),
                            (busy_to_idle, from_busy, m.mu)):
        sigma = math.sqrt(p * (1 - p) / total)
        assert abs(count / total - p) < 3 * sigma


def test_gain_ccdf_values():
    assert gain_ccdf(FadingModel(1.0), 0.0) == 1.0
    assert gain_ccdf(FadingModel(1.0), 1.0) == pytest.approx(math.exp(-1))
    assert gain_ccdf(FadingModel(2.0), 2.0) == pytest.approx(math.exp(-1))
    with pytest.raises(ValueError):
        gain_ccdf(FadingModel(1.0), -0.1)
    with pytest.raises(ValueError):
        FadingModel(0.0)


@given(st.floats(min_value=0.01, max_value=100.0),
       st.floats(min_value=0.0, max_value=1e3),
       st.floats(min_value=0.0, max_value=1e3))
def test_gain_ccdf_monotone(mean, x1, x2):
    lo, hi = sorted((x1, x2))
    model = FadingModel(mean)
    assert gain_ccdf(model, lo) >= gain_ccdf(model, hi)
