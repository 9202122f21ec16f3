"""Cooperative spectrum sensing: Bayesian fusion and the optimal threshold.

Each sensor reports a binary reading (1 = sensed busy) with false-alarm
probability ``epsilon`` (busy reading on an idle channel) and miss-detection
probability ``delta`` (idle reading on a busy channel).  Fusing the readings
with the channel utilization prior gives the posterior availability
``a(readings)``; the channel is declared idle when ``a`` exceeds a threshold
``tau``.  The optimal ``tau`` maximizes the detection probability subject to
a cap ``gamma`` on the collision probability with the primary user.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

from .errors import CapacityLimitError

MAX_SENSORS = 20  # enumeration is 2**n


@dataclass(frozen=True)
class SensorProfile:
    false_alarm: float     # P{reading=1 | idle}
    miss_detection: float  # P{reading=0 | busy}

    def __post_init__(self):
        for name in ("false_alarm", "miss_detection"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ValueError(f"{name}={p} outside [0, 1)")
        if self.false_alarm + self.miss_detection >= 1.0:
            warnings.warn(
                f"uninformative sensor: false_alarm + miss_detection = "
                f"{self.false_alarm + self.miss_detection} >= 1", stacklevel=2)


@dataclass(frozen=True)
class ThresholdEntry:
    value: float          # posterior availability of this outcome
    outcome: tuple        # binary readings, one per sensor
    idle_prob: float      # P{outcome | idle}
    busy_prob: float      # P{outcome | busy}


@dataclass
class ThresholdTable:
    """All 2**n sensing outcomes sorted by availability, non-increasing."""

    eta: float
    entries: list[ThresholdEntry]
    optimal_index: Optional[int] = field(default=None)
    tau_star: Optional[float] = field(default=None)


@dataclass(frozen=True)
class ThresholdDecision:
    tau_star: float
    collision_prob: float  # P{declared idle | busy} at tau_star
    detection_prob: float  # P{declared idle | idle} at tau_star
    optimal_index: int     # entries strictly above tau_star: entries[:optimal_index]


def _reading_likelihood_ratio(profile: SensorProfile, reading: int) -> float:
    """P{reading | busy} / P{reading | idle}; +inf when the idle term is 0."""
    if reading:
        if profile.false_alarm == 0.0:
            return math.inf
        return (1.0 - profile.miss_detection) / profile.false_alarm
    return profile.miss_detection / (1.0 - profile.false_alarm)


def conditional_availability(eta: float, profiles: Sequence[SensorProfile],
                             outcome: Sequence[int]) -> float:
    """Posterior probability that the channel is idle given the readings."""
    if len(profiles) != len(outcome):
        raise ValueError(f"{len(profiles)} profiles but {len(outcome)} readings")
    if eta >= 1.0:
        return 0.0
    if eta <= 0.0:
        return 1.0
    factors = []
    for profile, reading in zip(profiles, outcome):
        factor = _reading_likelihood_ratio(profile, reading)
        if math.isinf(factor):
            return 0.0  # a certain busy reading overrides everything
        factors.append(factor)
    ratio = 1.0
    for factor in sorted(factors):
        # canonical order: outcomes with permuted identical readings produce
        # bit-identical values, so threshold ties group exactly
        ratio *= factor
    return 1.0 / (1.0 + eta / (1.0 - eta) * ratio)


def iterative_availability(previous: float, profile: SensorProfile, reading: int) -> float:
    """Fold one more reading into the running availability.

    Folding readings one at a time reproduces the batch posterior of
    ``conditional_availability``, in any order.
    """
    if previous <= 0.0:
        return 0.0
    factor = _reading_likelihood_ratio(profile, reading)
    if math.isinf(factor):
        return 0.0
    return 1.0 / (1.0 + (1.0 / previous - 1.0) * factor)


def enumerate_thresholds(eta: float, profiles: Sequence[SensorProfile]) -> ThresholdTable:
    """Availability of every outcome, sorted non-increasing (ties kept)."""
    n = len(profiles)
    if n < 1:
        raise ValueError("at least one sensor required")
    if n > MAX_SENSORS:
        raise CapacityLimitError(f"{n} sensors would enumerate 2**{n} outcomes "
                                 f"(limit {MAX_SENSORS})")
    entries = []
    for outcome in product((0, 1), repeat=n):
        idle_prob = 1.0
        busy_prob = 1.0
        for profile, reading in zip(profiles, outcome):
            idle_prob *= profile.false_alarm if reading else 1.0 - profile.false_alarm
            busy_prob *= 1.0 - profile.miss_detection if reading else profile.miss_detection
        value = conditional_availability(eta, profiles, outcome)
        entries.append(ThresholdEntry(value, outcome, idle_prob, busy_prob))
    entries.sort(key=lambda e: (-e.value, e.outcome))
    return ThresholdTable(eta=eta, entries=entries)


def optimal_threshold(table: ThresholdTable, gamma: float) -> ThresholdDecision:
    """Largest admissible threshold: maximal detection with collision <= gamma.

    Walks the sorted outcomes in blocks of equal availability (a threshold
    cannot split a tie) and admits blocks while the cumulative busy-side
    probability stays within ``gamma``.  ``tau_star`` is the availability of
    the first rejected block (access rule: ``a > tau_star``), or 0.0 when
    every block is admitted.
    """
    if not 0.0 < gamma:
        raise ValueError(f"gamma={gamma} must be positive")
    entries = table.entries
    if table.eta <= 0.0:
        # No primary user: the collision constraint is vacuous, always access.
        decision = ThresholdDecision(0.0, 0.0, 1.0, len(entries))
    elif table.eta >= 1.0:
        # Channel never idle: every posterior is 0, never access.
        decision = ThresholdDecision(0.0, 0.0, 0.0, 0)
    else:
        collision = 0.0
        detection = 0.0
        admitted = 0
        i = 0
        while i < len(entries):
            j = i
            block_busy = 0.0
            block_idle = 0.0
            while j < len(entries) and entries[j].value == entries[i].value:
                block_busy += entries[j].busy_prob
                block_idle += entries[j].idle_prob
                j += 1
            if collision + block_busy > gamma:
                break
            collision += block_busy
            detection += block_idle
            admitted = j
            i = j
        tau = entries[admitted].value if admitted < len(entries) else 0.0
        decision = ThresholdDecision(tau, collision, detection, admitted)
    table.optimal_index = decision.optimal_index
    table.tau_star = decision.tau_star
    return decision


def decision_probabilities(eta: float, profiles: Sequence[SensorProfile],
                           gamma: float) -> ThresholdDecision:
    """Detection/collision probabilities at the optimal threshold."""
    return optimal_threshold(enumerate_thresholds(eta, profiles), gamma)


def access_probability(availability: float, gamma: float) -> float:
    """Collision-capped channel access probability min{gamma / (1 - a), 1}."""
    if not 0.0 <= availability <= 1.0:
        raise ValueError(f"availability={availability} outside [0, 1]")
    if availability >= 1.0:
        return 1.0
    return min(gamma / (1.0 - availability), 1.0)
