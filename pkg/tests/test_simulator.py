import numpy as np
import pytest

from crlab import _backend
from crlab.access import Strategy
from crlab.channel import MarkovChannelModel
from crlab.errors import ConfigError
from crlab.sensing import SensorProfile
from crlab.simulator import (ScenarioConfig, analytical_capacity, run_scenario,
                             sweep, _decision_tables, _pack_arrays)


def small_config(**kw):
    base = dict(
        models=[MarkovChannelModel.from_rates(0.7, 0.2)] * 3,
        sensors=[[SensorProfile(0.23, 0.23)] * 5] * 3,
        gamma=0.08,
        n_links=7,
        packet_bits=1000,
        slot_seconds=1e-3,
        horizon_slots=4000,
        seeds=[0, 1, 2],
        decode_override={Strategy.DF: 0.9, Strategy.AF: 0.9, Strategy.DL: 0.25},
    )
    base.update(kw)
    return ScenarioConfig(**base)


def test_validation():
    with pytest.raises(ConfigError):
        small_config(horizon_slots=4001)
    with pytest.raises(ConfigError):
        small_config(seeds=[])
    with pytest.raises(ConfigError):
        small_config(decode_override=None)
    with pytest.raises(ConfigError):
        small_config(gamma=0.0)


def test_determinism_same_seed():
    cfg = small_config()
    a = run_scenario(cfg, Strategy.DF)
    b = run_scenario(cfg, Strategy.DF)
    assert a.samples_bps == b.samples_bps
    assert a.mean_bps == b.mean_bps
    assert (a.collision_rates == b.collision_rates).all()


def test_workers_do_not_change_results():
    cfg = small_config(seeds=list(range(6)))
    serial = run_scenario(cfg, Strategy.AF, workers=1)
    parallel = run_scenario(cfg, Strategy.AF, workers=4)
    assert serial.samples_bps == parallel.samples_bps


def test_perfect_direct_link_throughput_exact():
    # always-idle channels, perfect sensing, a single link that always wins,
    # certain decoding: every slot delivers one frame per channel
    m_count = 4
    cfg = ScenarioConfig(
        models=[MarkovChannelModel.from_utilization(0.0)] * m_count,
        sensors=[[SensorProfile(0.0, 0.0)] * 2] * m_count,
        gamma=0.5,
        n_links=1,
        packet_bits=1000,
        slot_seconds=1e-3,
        horizon_slots=2000,
        seeds=[0, 1],
        decode_override={s: 1.0 for s in Strategy})
    stats = run_scenario(cfg, Strategy.DL)
    expected = m_count * 1000 / 1e-3
    assert stats.samples_bps == [pytest.approx(expected), pytest.approx(expected)]
    assert stats.ci95_bps == pytest.approx(0.0, abs=1e-9)


def test_collision_rate_within_tolerance():
    cfg = small_config(horizon_slots=40000, seeds=list(range(5)))
    stats = run_scenario(cfg, Strategy.DF)
    # empirical transmit-while-busy rate stays within gamma plus sampling noise
    n_busy = 0.6 * cfg.horizon_slots * len(cfg.seeds)
    margin = 3 * np.sqrt(cfg.gamma * (1 - cfg.gamma) / n_busy)
    assert stats.collision_rates.max() <= cfg.gamma + margin


def test_simulation_tracks_analysis():
    cfg = small_config(horizon_slots=40000, seeds=list(range(8)))
    for strategy in Strategy:
        stats = run_scenario(cfg, strategy)
        ana = analytical_capacity(cfg, strategy)
        se = np.std(stats.samples_bps, ddof=1) / np.sqrt(len(stats.samples_bps))
        assert abs(stats.mean_bps - ana) < 5 * se


def test_backend_equivalence():
    try:
        cython = _backend.get_backend("cython")
    except ImportError:
        pytest.skip("compiled kernel not available")
    python = _backend.get_backend("python")
    cfg = small_config()
    lam, mu, eta, eps, dlt, ns = _pack_arrays(cfg)
    acc_odd, acc_even = _decision_tables(cfg)
    rates = cfg.decode_rates(Strategy.AF)
    from numpy.random import PCG64, SeedSequence
    for seed in (0, 5):
        args = (1000, 1, lam, mu, eta, eps, dlt, ns, acc_odd, acc_even, 7, rates)
        res_c = cython.sim_run(PCG64(SeedSequence([seed, 11])),
                               PCG64(SeedSequence([seed, 13])), *args)
        res_p = python.sim_run(PCG64(SeedSequence([seed, 11])),
                               PCG64(SeedSequence([seed, 13])), *args)
        assert res_c[0] == res_p[0]
        assert (res_c[1] == res_p[1]).all()
        assert (res_c[2] == res_p[2]).all()


def test_backend_equivalence_ragged_sensors():
    try:
        cython = _backend.get_backend("cython")
    except ImportError:
        pytest.skip("compiled kernel not available")
    python = _backend.get_backend("python")
    cfg = small_config(sensors=[[SensorProfile(0.23, 0.23)] * 5,
                                [SensorProfile(0.3, 0.3)] * 2,
                                [SensorProfile(0.2, 0.25)] * 3])
    lam, mu, eta, eps, dlt, ns = _pack_arrays(cfg)
    acc_odd, acc_even = _decision_tables(cfg)
    rates = cfg.decode_rates(Strategy.DF)
    from numpy.random import PCG64, SeedSequence
    args = (500, 0, lam, mu, eta, eps, dlt, ns, acc_odd, acc_even, 7, rates)
    res_c = cython.sim_run(PCG64(SeedSequence([2, 11])), PCG64(SeedSequence([2, 13])), *args)
    res_p = python.sim_run(PCG64(SeedSequence([2, 11])), PCG64(SeedSequence([2, 13])), *args)
    assert res_c[0] == res_p[0]
    assert (res_c[1] == res_p[1]).all()


def test_sweep_shapes_and_empty_grid():
    cfg = small_config(seeds=[0, 1], horizon_slots=2000)
    points = sweep(cfg, "channels", [1, 2])
    assert len(points) == 2 * len(Strategy)
    assert points[0].param_value == 1.0
    with pytest.raises(ConfigError):
        sweep(cfg, "channels", [])
    with pytest.raises(ConfigError):
        sweep(cfg, "frequency", [1])


def test_relay_power_sweep_requires_links():
    cfg = small_config()
    with pytest.raises(ConfigError):
        cfg.with_relay_power(0.02)
