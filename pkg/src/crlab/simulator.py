"""Slotted Monte Carlo engine cross-validating the capacity analysis.

A run evolves every licensed channel per slot, draws sensing readings,
applies the optimal-threshold access decisions (relaxed tolerance in odd
slots, nominal in even slots), contends via p-persistent CSMA, and counts
delivered frames with per-frame decode draws at the winner's closed-form
rate.  Throughput aggregates over seeds with Student-t confidence intervals.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.random import PCG64, SeedSequence
from scipy import stats

from . import _backend
from .access import Strategy, adjusted_tolerance, capacity, csma_probs, expected_frames, \
    slot_pair_distribution
from .channel import MarkovChannelModel
from .errors import ConfigError
from .relay import RelayLink, decoding_rate_af, decoding_rate_df, decoding_rate_dl
from .sensing import SensorProfile, conditional_availability, decision_probabilities

KERNEL_BACKEND = _backend.BACKEND
MAX_SENSORS_SIM = 12  # decision tables enumerate 2**n outcomes per channel

_STRATEGY_CODE = {Strategy.DF: 0, Strategy.AF: 1, Strategy.DL: 2}
_ENV_STREAM, _FRAME_STREAM = 11, 13


@dataclass
class ScenarioConfig:
    models: list[MarkovChannelModel]
    sensors: list[list[SensorProfile]]
    gamma: float
    n_links: int
    packet_bits: float
    slot_seconds: float
    horizon_slots: int
    seeds: list[int]
    links: Optional[list[RelayLink]] = None
    decode_override: Optional[dict[Strategy, float]] = None
    switching: float = 0.5  # Markov mixing rate used by eta sweeps

    def __post_init__(self):
        if not self.models:
            raise ConfigError("at least one channel required")
        if len(self.models) != len(self.sensors):
            raise ConfigError("one sensor set per channel required")
        if len(self.models) > 30:
            raise ConfigError("at most 30 channels supported")
        for m, profiles in enumerate(self.sensors):
            if not 1 <= len(profiles) <= MAX_SENSORS_SIM:
                raise ConfigError(
                    f"channel {m}: {len(profiles)} sensors outside [1, {MAX_SENSORS_SIM}]")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma={self.gamma} outside (0, 1)")
        if self.n_links < 1:
            raise ConfigError(f"n_links={self.n_links} must be >= 1")
        if self.horizon_slots < 2 or self.horizon_slots % 2:
            raise ConfigError(f"horizon_slots={self.horizon_slots} must be even and >= 2")
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if self.packet_bits <= 0 or self.slot_seconds <= 0:
            raise ConfigError("packet_bits and slot_seconds must be positive")
        if self.links is None and self.decode_override is None:
            raise ConfigError("either relay links or a decode-rate override is required")
        if self.links is not None and len(self.links) != self.n_links:
            raise ConfigError("one relay link per contention link required")
        if self.decode_override is not None:
            for strategy, rate in self.decode_override.items():
                if not 0.0 <= rate <= 1.0:
                    raise ConfigError(f"decode rate override {strategy}: {rate} outside [0, 1]")

    @property
    def n_channels(self) -> int:
        return len(self.models)

    @property
    def n_pairs(self) -> int:
        return self.horizon_slots // 2

    def decode_rates(self, strategy: Strategy) -> np.ndarray:
        """Per-link frame decode rates for one strategy."""
        if self.decode_override is not None and strategy in self.decode_override:
            return np.full(self.n_links, self.decode_override[strategy])
        if self.links is None:
            raise ConfigError(f"no decode rate available for {strategy}")
        fn = {Strategy.DF: decoding_rate_df, Strategy.AF: decoding_rate_af,
              Strategy.DL: decoding_rate_dl}[strategy]
        return np.array([fn(link) for link in self.links])

    def with_channels(self, n_channels: int) -> "ScenarioConfig":
        """Replicate the first channel's model and sensors n_channels times."""
        return replace(self, models=[self.models[0]] * n_channels,
                       sensors=[self.sensors[0]] * n_channels)

    def with_eta(self, eta: float) -> "ScenarioConfig":
        model = MarkovChannelModel.from_utilization(eta, self.switching)
        return replace(self, models=[model] * self.n_channels)

    def with_relay_power(self, p_r: float) -> "ScenarioConfig":
        if self.links is None:
            raise ConfigError("relay-power sweep requires relay links, not an override")
        if self.decode_override:
            raise ConfigError("relay-power sweep is meaningless with overridden decode rates")
        return replace(self, links=[replace(link, p_r=p_r) for link in self.links])


@dataclass
class RunStats:
    strategy: Strategy
    samples_bps: list[float]   # per-seed throughput
    mean_bps: float
    ci95_bps: float            # Student-t half width over seeds
    collision_rates: np.ndarray  # per channel, pooled over seeds
    n_pairs: int


@dataclass
class SweepPoint:
    param_value: float
    strategy: Strategy
    stats: RunStats
    analytical_bps: float


def _decision_tables(config: ScenarioConfig):
    """Per-channel access lookup tables indexed by sensing-outcome bits.

    Built with the same availability routine that produced the threshold, so
    boundary outcomes compare exactly.
    """
    p1 = csma_probs(config.n_links).p1
    gamma_odd = adjusted_tolerance(config.gamma, p1)
    m_count = config.n_channels
    max_ns = max(len(p) for p in config.sensors)
    acc_odd = np.zeros((m_count, 1 << max_ns), dtype=np.int8)
    acc_even = np.zeros_like(acc_odd)
    for m, (model, profiles) in enumerate(zip(config.models, config.sensors)):
        tau_odd = decision_probabilities(model.eta, profiles, gamma_odd).tau_star
        tau_even = decision_probabilities(model.eta, profiles, config.gamma).tau_star
        for idx in range(1 << len(profiles)):
            outcome = tuple((idx >> i) & 1 for i in range(len(profiles)))
            a = conditional_availability(model.eta, profiles, outcome)
            acc_odd[m, idx] = 1 if a > tau_odd else 0
            acc_even[m, idx] = 1 if a > tau_even else 0
    return acc_odd, acc_even


def _pack_arrays(config: ScenarioConfig):
    m_count = config.n_channels
    max_ns = max(len(p) for p in config.sensors)
    lam = np.array([m.lam for m in config.models])
    mu = np.array([m.mu for m in config.models])
    eta = np.array([m.eta for m in config.models])
    eps = np.zeros((m_count, max_ns))
    dlt = np.zeros((m_count, max_ns))
    ns = np.zeros(m_count, dtype=np.int64)
    for m, profiles in enumerate(config.sensors):
        ns[m] = len(profiles)
        for i, prof in enumerate(profiles):
            eps[m, i] = prof.false_alarm
            dlt[m, i] = prof.miss_detection
    return lam, mu, eta, eps, dlt, ns


def run_scenario(config: ScenarioConfig, strategy: Strategy,
                 workers: int = 1) -> RunStats:
    """Simulate every seed and aggregate throughput statistics."""
    lam, mu, eta, eps, dlt, ns = _pack_arrays(config)
    acc_odd, acc_even = _decision_tables(config)
    rates = config.decode_rates(strategy)
    code = _STRATEGY_CODE[strategy]
    n_pairs = config.n_pairs

    def one_seed(seed: int):
        env = PCG64(SeedSequence([seed, _ENV_STREAM]))
        frm = PCG64(SeedSequence([seed, _FRAME_STREAM]))
        return _backend.sim_run(env, frm, n_pairs, code, lam, mu, eta,
                                eps, dlt, ns, acc_odd, acc_even,
                                config.n_links, rates)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_seed, config.seeds))
    else:
        results = [one_seed(seed) for seed in config.seeds]

    elapsed = n_pairs * 2 * config.slot_seconds
    samples = [delivered * config.packet_bits / elapsed for delivered, _, _ in results]
    collisions = sum(c for _, c, _ in results)
    busy = sum(b for _, _, b in results)
    rates_per_channel = np.divide(collisions, busy, out=np.zeros(len(busy)),
                                  where=busy > 0)
    mean = float(np.mean(samples))
    if len(samples) > 1:
        half = float(stats.t.ppf(0.975, len(samples) - 1)
                     * np.std(samples, ddof=1) / np.sqrt(len(samples)))
    else:
        half = 0.0
    return RunStats(strategy=strategy, samples_bps=samples, mean_bps=mean,
                    ci95_bps=half, collision_rates=rates_per_channel,
                    n_pairs=n_pairs)


def analytical_capacity(config: ScenarioConfig, strategy: Strategy) -> float:
    """Closed-form capacity for the configured scenario."""
    p1 = csma_probs(config.n_links).p1
    dist = slot_pair_distribution(config.models, config.sensors, config.gamma, p1)
    frames = expected_frames(dist, strategy)
    return capacity(frames, config.decode_rates(strategy), p1,
                    config.packet_bits, config.slot_seconds)


def _apply_parameter(config: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    if parameter == "channels":
        return config.with_channels(int(value))
    if parameter == "eta":
        return config.with_eta(float(value))
    if parameter == "relay_power":
        return config.with_relay_power(float(value))
    raise ConfigError(f"unknown sweep parameter {parameter!r}")


def sweep(config: ScenarioConfig, parameter: str, grid: Sequence,
          strategies: Sequence[Strategy] = tuple(Strategy),
          workers: int = 1) -> list[SweepPoint]:
    """Simulated and analytical throughput over a parameter grid."""
    if len(grid) == 0:
        raise ConfigError("sweep grid must not be empty")
    points = []
    for value in grid:
        cfg = _apply_parameter(config, parameter, value)
        for strategy in strategies:
            stats_ = run_scenario(cfg, strategy, workers=workers)
            points.append(SweepPoint(param_value=float(value), strategy=strategy,
                                     stats=stats_,
                                     analytical_bps=analytical_capacity(cfg, strategy)))
    return points
