"""Licensed-channel occupancy (two-state Markov) and fading-gain models.

Convention: the "idle" state means no primary user on the channel.  The
transition probabilities are ``lam = P(idle -> idle)`` and
``mu = P(busy -> idle)``; ``eta`` is the long-run busy fraction
(channel utilization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateChainError

_ETA_TOL = 1e-9


@dataclass(frozen=True)
class MarkovChannelModel:
    lam: float  # P(idle -> idle)
    mu: float   # P(busy -> idle)
    eta: float = field(default=-1.0)  # busy fraction; derived when omitted

    def __post_init__(self):
        for name in ("lam", "mu"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")
        if self.eta < 0.0:
            object.__setattr__(self, "eta", 1.0 - stationary_idle_prob_rates(self.lam, self.mu))
        elif not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta={self.eta} outside [0, 1]")
        else:
            implied = 1.0 - stationary_idle_prob_rates(self.lam, self.mu)
            if abs(implied - self.eta) > _ETA_TOL:
                raise ValueError(
                    f"eta={self.eta} inconsistent with (lam={self.lam}, mu={self.mu}): "
                    f"stationary busy fraction is {implied}")

    @classmethod
    def from_rates(cls, lam: float, mu: float) -> "MarkovChannelModel":
        return cls(lam=lam, mu=mu)

    @classmethod
    def from_utilization(cls, eta: float, switching: float = 0.5) -> "MarkovChannelModel":
        """Model with busy fraction ``eta`` and mixing rate ``switching``.

        Parametrized as ``lam = 1 - eta*s``, ``mu = (1 - eta)*s`` so that the
        stationary busy fraction is exactly ``eta`` for any ``s in (0, 1]``.
        ``s = 0.5`` reproduces the reference setting (0.7, 0.2) at eta 0.6.
        """
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta={eta} outside [0, 1]")
        if not 0.0 < switching <= 1.0:
            raise ValueError(f"switching={switching} outside (0, 1]")
        return cls(lam=1.0 - eta * switching, mu=(1.0 - eta) * switching)


@dataclass(frozen=True)
class ChannelState:
    occupied: bool  # True = primary user present


@dataclass(frozen=True)
class FadingModel:
    """Exponentially distributed power gain with a distance-dependent mean."""

    mean_gain: float

    def __post_init__(self):
        if not self.mean_gain > 0.0:
            raise ValueError(f"mean_gain={self.mean_gain} must be > 0")


def stationary_idle_prob_rates(lam: float, mu: float) -> float:
    denom = 1.0 - lam + mu
    if denom <= 0.0:
        raise DegenerateChainError(
            f"chain (lam={lam}, mu={mu}) has no unique stationary distribution")
    return mu / denom


def stationary_idle_prob(model: MarkovChannelModel) -> float:
    """Long-run probability that the channel is idle, mu / (1 - lam + mu)."""
    return stationary_idle_prob_rates(model.lam, model.mu)


def step_channel(state: ChannelState, model: MarkovChannelModel, draw: float) -> ChannelState:
    """Advance one slot using a uniform ``draw`` from [0, 1).

    Idle stays idle when ``draw < lam``; busy turns idle when ``draw < mu``.
    """
    if state.occupied:
        return ChannelState(occupied=not draw < model.mu)
    return ChannelState(occupied=not draw < model.lam)


def gain_ccdf(model: FadingModel, x: float) -> float:
    """P{gain > x} for the exponential power-gain model."""
    if x < 0.0:
        raise ValueError(f"x={x} must be non-negative")
    return math.exp(-x / model.mean_gain)
