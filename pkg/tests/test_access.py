import math
from itertools import product

import numpy as np
import pytest

from crlab.access import (ContentionOutcome, Strategy, adjusted_tolerance,
                          capacity, csma_probs, expected_frames,
                          joint_count_pmf, slot_pair_distribution)
from crlab.channel import MarkovChannelModel
from crlab.errors import CapacityLimitError
from crlab.sensing import SensorProfile


def table2_distribution(m_count, eta=0.6, eps=0.23, n_sensors=5, gamma=0.08, n_links=7):
    model = MarkovChannelModel.from_utilization(eta)
    profiles = [SensorProfile(eps, eps)] * n_sensors
    p1 = csma_probs(n_links).p1
    return slot_pair_distribution([model] * m_count, [profiles] * m_count, gamma, p1)


def test_csma_reference_values():
    assert csma_probs(1) == ContentionOutcome(0.0, 1.0, 0.0)
    two = csma_probs(2)
    assert (two.p0, two.p1, two.p2) == pytest.approx((0.25, 0.5, 0.25))
    seven = csma_probs(7)
    assert (seven.p0, seven.p1, seven.p2) == pytest.approx((0.3399, 0.3966, 0.2635), abs=5e-5)
    with pytest.raises(ValueError):
        csma_probs(0)


def test_adjusted_tolerance():
    assert adjusted_tolerance(0.08, 0.3966) == pytest.approx(0.2017, abs=5e-5)
    assert adjusted_tolerance(0.5, 0.4) == 1.0
    assert adjusted_tolerance(0.08, 1.0) == pytest.approx(0.08)
    with pytest.raises(ValueError):
        adjusted_tolerance(0.08, 0.0)


def test_distribution_normalization_and_marginals():
    dist = table2_distribution(3)
    for m in range(3):
        assert dist.joint[m].sum() == pytest.approx(1.0, abs=1e-12)
        # states marginal is the stationary law
        busy = dist.joint[m][:, 1, :, :].sum()
        assert busy == pytest.approx(0.6, abs=1e-12)
        assert dist.pair_pmf[m].sum() == pytest.approx(1.0, abs=1e-12)


def test_distribution_perfect_sensing_idle_channel():
    model = MarkovChannelModel.from_utilization(0.0)
    perfect = [SensorProfile(0.0, 0.0)] * 2
    dist = slot_pair_distribution([model], [perfect], gamma=0.08, p1=0.5)
    assert dist.joint[0, 0, 0, 0, 0] == pytest.approx(1.0)
    assert dist.pair_pmf[0, 1, 1] == pytest.approx(1.0)


def test_expected_frames_degenerate():
    model = MarkovChannelModel.from_utilization(0.0)
    perfect = [SensorProfile(0.0, 0.0)]
    dist = slot_pair_distribution([model] * 5, [perfect] * 5, gamma=0.5, p1=1.0)
    assert expected_frames(dist, Strategy.DF) == pytest.approx(5.0)
    assert expected_frames(dist, Strategy.AF) == pytest.approx(4.0)
    assert expected_frames(dist, Strategy.DL) == pytest.approx(10.0)


def test_expected_frames_single_channel_af_floor():
    dist = table2_distribution(1)
    assert expected_frames(dist, Strategy.AF) == 0.0


def _enumerate_frames(dist, strategy):
    """Exhaustive expectation over all 4**M per-channel indicator states."""
    m_count = dist.n_channels
    total = 0.0
    for states in product(range(4), repeat=m_count):
        p = 1.0
        n_od = n_ev = 0
        for m, s in enumerate(states):
            u_od, u_ev = s // 2, s % 2
            p *= dist.pair_pmf[m, u_od, u_ev]
            n_od += u_od
            n_ev += u_ev
        if strategy is Strategy.DF:
            frames = min(n_od, n_ev)
        elif strategy is Strategy.AF:
            frames = n_od // 2 + n_ev // 2
        else:
            frames = n_od + n_ev
        total += p * frames
    return total


@pytest.mark.parametrize("strategy", list(Strategy))
@pytest.mark.parametrize("m_count", [1, 2, 3])
def test_expected_frames_matches_enumeration(strategy, m_count):
    dist = table2_distribution(m_count)
    exact = expected_frames(dist, strategy)
    brute = _enumerate_frames(dist, strategy)
    assert exact == pytest.approx(brute, abs=1e-12)


def test_expected_frames_heterogeneous_channels():
    models = [MarkovChannelModel.from_utilization(e) for e in (0.3, 0.6, 0.8)]
    profs = [[SensorProfile(0.2, 0.2)] * 3,
             [SensorProfile(0.3, 0.25)] * 2,
             [SensorProfile(0.23, 0.23)] * 4]
    dist = slot_pair_distribution(models, profs, gamma=0.1, p1=0.4)
    for strategy in Strategy:
        assert expected_frames(dist, strategy) == pytest.approx(
            _enumerate_frames(dist, strategy), abs=1e-12)


def test_frame_count_pointwise_bounds():
    # DF never beats either slot's count; AF never beats DL
    dist = table2_distribution(3)
    pmf = joint_count_pmf(dist)
    for (n_od, n_ev), p in np.ndenumerate(pmf):
        if p == 0.0:
            continue
        assert min(n_od, n_ev) <= n_od and min(n_od, n_ev) <= n_ev
        assert n_od // 2 + n_ev // 2 <= n_od + n_ev


def test_capacity_reference_value():
    c = capacity(4.0, [0.8187] * 7, p1=0.3966, packet_bits=1000, slot_seconds=1e-3)
    assert c == pytest.approx(649_470, rel=1e-3)
    assert capacity(0.0, [0.9] * 7, 0.4, 1000, 1e-3) == 0.0


def test_capacity_linear_in_packet_bits():
    base = capacity(2.5, [0.7] * 4, 0.42, 1000, 1e-3)
    assert capacity(2.5, [0.7] * 4, 0.42, 2000, 1e-3) == pytest.approx(2 * base)


def test_exact_convolution_guard():
    with pytest.raises(CapacityLimitError):
        joint_count_pmf(table2_distribution(31))
