"""p-persistent CSMA contention and exact network capacity.

Channel time is organized in pairs of slots: transmitters contend in the odd
slot (RTS with probability 1/N each) and the winner keeps its channels for
the even slot.  Because a channel is only entered with probability ``p1`` in
the odd slot, the collision tolerance there is relaxed to ``gamma / p1``; the
even slot keeps ``gamma``.

``expected_frames`` computes the exact expectation of the per-pair frame
count by convolving, across channels, the joint law of the per-channel
"usable" indicators (idle and declared idle) in the two slots.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import MarkovChannelModel
from .errors import CapacityLimitError
from .sensing import SensorProfile, decision_probabilities

MAX_CHANNELS_EXACT = 30
_SUM_TOL = 1e-12


class Strategy(enum.Enum):
    DF = "df"
    AF = "af"
    DL = "dl"


@dataclass(frozen=True)
class ContentionOutcome:
    p0: float  # nobody sends RTS
    p1: float  # exactly one sender wins
    p2: float  # RTS collision

    def __post_init__(self):
        total = self.p0 + self.p1 + self.p2
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"contention probabilities sum to {total}, not 1")
        for name in ("p0", "p1", "p2"):
            p = getattr(self, name)
            if not -_SUM_TOL <= p <= 1.0 + _SUM_TOL:
                raise ValueError(f"{name}={p} outside [0, 1]")


@dataclass
class SlotPairDistribution:
    """Per-channel joint law over (decision, state) in the odd and even slot.

    ``joint[m, d_od, s_od, d_ev, s_ev]`` with d/s in {0, 1} (0 = declared
    idle / truly idle).  ``pair_pmf[m, u_od, u_ev]`` marginalizes to the
    usable indicators ``u = (s == 0 and d == 0)``.
    """

    joint: np.ndarray     # (M, 2, 2, 2, 2)
    pair_pmf: np.ndarray  # (M, 2, 2)
    gamma_odd: float
    gamma_even: float

    @property
    def n_channels(self) -> int:
        return self.joint.shape[0]


def csma_probs(n_links: int) -> ContentionOutcome:
    """Case probabilities for p-persistent contention with p = 1/N."""
    if n_links < 1:
        raise ValueError(f"n_links={n_links} must be >= 1")
    n = n_links
    p0 = (1.0 - 1.0 / n) ** n
    p1 = (1.0 - 1.0 / n) ** (n - 1)
    return ContentionOutcome(p0=p0, p1=p1, p2=1.0 - p0 - p1)


def adjusted_tolerance(gamma: float, p1: float) -> float:
    """Relaxed odd-slot tolerance min{gamma / p1, 1}."""
    if p1 <= 0.0:
        raise ValueError(f"p1={p1} leaves the channel never accessed")
    return min(gamma / p1, 1.0)


def slot_pair_distribution(models: Sequence[MarkovChannelModel],
                           sensor_sets: Sequence[Sequence[SensorProfile]],
                           gamma: float, p1: float) -> SlotPairDistribution:
    """Joint (decision, state) law per channel for one odd/even slot pair."""
    if len(models) != len(sensor_sets):
        raise ValueError("one sensor set per channel required")
    gamma_odd = adjusted_tolerance(gamma, p1)
    m_count = len(models)
    joint = np.zeros((m_count, 2, 2, 2, 2))
    for m, (model, profiles) in enumerate(zip(models, sensor_sets)):
        odd = decision_probabilities(model.eta, profiles, gamma_odd)
        even = decision_probabilities(model.eta, profiles, gamma)
        # P{D=0 | S}: detection on an idle channel, collision on a busy one.
        d_given_s = {
            "od": {0: odd.detection_prob, 1: odd.collision_prob},
            "ev": {0: even.detection_prob, 1: even.collision_prob},
        }
        p_state = {0: 1.0 - model.eta, 1: model.eta}
        trans = {(0, 0): model.lam, (0, 1): 1.0 - model.lam,
                 (1, 0): model.mu, (1, 1): 1.0 - model.mu}
        for s_od in (0, 1):
            for s_ev in (0, 1):
                base = p_state[s_od] * trans[(s_od, s_ev)]
                for d_od in (0, 1):
                    p_od = d_given_s["od"][s_od]
                    p_od = p_od if d_od == 0 else 1.0 - p_od
                    for d_ev in (0, 1):
                        p_ev = d_given_s["ev"][s_ev]
                        p_ev = p_ev if d_ev == 0 else 1.0 - p_ev
                        joint[m, d_od, s_od, d_ev, s_ev] = base * p_od * p_ev
        if abs(joint[m].sum() - 1.0) > _SUM_TOL:
            raise AssertionError(f"channel {m} joint law sums to {joint[m].sum()}")
    pair = np.zeros((m_count, 2, 2))
    for m in range(m_count):
        for d_od in (0, 1):
            for s_od in (0, 1):
                for d_ev in (0, 1):
                    for s_ev in (0, 1):
                        u_od = 1 if (d_od == 0 and s_od == 0) else 0
                        u_ev = 1 if (d_ev == 0 and s_ev == 0) else 0
                        pair[m, u_od, u_ev] += joint[m, d_od, s_od, d_ev, s_ev]
    return SlotPairDistribution(joint=joint, pair_pmf=pair,
                                gamma_odd=gamma_odd, gamma_even=gamma)


def joint_count_pmf(dist: SlotPairDistribution) -> np.ndarray:
    """Exact joint pmf of (odd-slot count, even-slot count) of usable channels.

    Convolves the per-channel joint indicator pairs, preserving the odd/even
    dependence within each channel.  Polynomial in the channel count.
    """
    m_count = dist.n_channels
    if m_count > MAX_CHANNELS_EXACT:
        raise CapacityLimitError(
            f"{m_count} channels exceeds the exact-convolution limit "
            f"{MAX_CHANNELS_EXACT}")
    pmf = np.zeros((m_count + 1, m_count + 1))
    pmf[0, 0] = 1.0
    for m in range(m_count):
        nxt = np.zeros_like(pmf)
        for (u_od, u_ev), p in np.ndenumerate(dist.pair_pmf[m]):
            if p == 0.0:
                continue
            if u_od == 0 and u_ev == 0:
                nxt += p * pmf
            else:
                nxt[u_od:, u_ev:] += p * pmf[:pmf.shape[0] - u_od, :pmf.shape[1] - u_ev]
        pmf = nxt
    return pmf


def expected_frames(dist: SlotPairDistribution, strategy: Strategy) -> float:
    """Exact expected frames delivered per slot pair for one strategy."""
    pmf = joint_count_pmf(dist)
    m_count = dist.n_channels
    i = np.arange(m_count + 1)
    odd, even = np.meshgrid(i, i, indexing="ij")
    if strategy is Strategy.DF:
        frames = np.minimum(odd, even)
    elif strategy is Strategy.AF:
        frames = odd // 2 + even // 2
    else:
        frames = odd + even
    return float((frames * pmf).sum())


def capacity(exp_frames: float, decode_rates: Sequence[float], p1: float,
             packet_bits: float, slot_seconds: float) -> float:
    """Network capacity in bit/s for one strategy.

    ``E[N] * sum_k(P_k * p1 * L) / (2 * N * T_s)`` with the winner uniform
    among the N links, frames spanning a two-slot pair.
    """
    n = len(decode_rates)
    if n < 1:
        raise ValueError("at least one link required")
    per_link = sum(rate * p1 * packet_bits for rate in decode_rates)
    return exp_frames * per_link / (2.0 * n * slot_seconds)
