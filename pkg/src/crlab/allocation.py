"""User-channel assignment for the multi-channel case without bonding.

The greedy selector repeatedly commits the user-channel pair with the best
marginal objective gain, under the transceiver constraint (one channel per
user) and the per-channel sender limit.  A brute-force enumerator provides
the optimality oracle, and the closed-form expected competitive ratio covers
random channel availability.  Two scheduling heuristics without alignment
serve as baselines.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CapacityLimitError

Evaluator = Callable[[np.ndarray], float]

MAX_BRUTE_USERS = 6
MAX_BRUTE_CHANNELS = 4


@dataclass
class AllocationResult:
    allocation: np.ndarray        # (N, M) binary
    objective: float
    marginal_gains: list[float]   # greedy only: objective increase per grow step
    sequence: list[tuple]         # greedy only: committed (user, channel) pairs
    grow_objective: float = 0.0   # greedy only: value after the grow phase


@dataclass(frozen=True)
class ScheduleEntry:
    user: int
    channel: int
    share: float  # fraction of the slot


def _check_feasible(b: np.ndarray, available: Sequence[int], max_per_channel: int):
    if (b.sum(axis=1) > 1).any():
        raise AssertionError("transceiver constraint violated")
    counts = b.sum(axis=0)
    if (counts > max_per_channel).any():
        raise AssertionError("per-channel sender limit violated")
    used = np.flatnonzero(counts > 0)
    if not set(used).issubset(set(available)):
        raise AssertionError("allocation uses an unavailable channel")


def greedy_select(available: Sequence[int], n_users: int, evaluator: Evaluator,
                  max_per_channel: int, n_channels: Optional[int] = None) -> AllocationResult:
    """Best-marginal-gain assignment, polished by a drop/swap/move pass.

    The grow phase commits the pair with the largest marginal gain while that
    gain is positive (crowding a channel can shrink every group member's
    aligned rate, so gains are not always positive); ties break
    lexicographically on (user, channel).  An improvement pass then applies
    single-pair drops, same-channel user swaps, and channel moves until none
    helps, which keeps the single-available-channel case at its optimum.
    A failing evaluation skips that pair with a warning instead of aborting.
    """
    available = sorted(available)
    m_total = n_channels if n_channels is not None else (max(available) + 1 if available else 1)
    b = np.zeros((n_users, m_total), dtype=np.int64)

    def value(matrix) -> Optional[float]:
        try:
            return evaluator(matrix)
        except Exception as exc:  # keep allocating around a bad pair
            warnings.warn(f"evaluator failed on {matrix.nonzero()}: {exc}",
                          stacklevel=3)
            return None

    base = evaluator(b)
    users_left = list(range(n_users))
    open_channels = list(available)
    gains: list[float] = []
    sequence: list[tuple] = []
    while users_left and open_channels:
        best = None
        best_val = -math.inf
        for j in users_left:
            for m in open_channels:
                b[j, m] = 1
                val = value(b)
                b[j, m] = 0
                if val is not None and val > best_val:
                    best_val = val
                    best = (j, m)
        if best is None or best_val <= base:
            break
        j, m = best
        b[j, m] = 1
        gains.append(best_val - base)
        base = best_val
        sequence.append((j, m))
        users_left.remove(j)
        if int(b[:, m].sum()) >= max_per_channel:
            open_channels.remove(m)
        _check_feasible(b, available, max_per_channel)
    grow_objective = base

    improved = True
    while improved:
        improved = False
        best_val = base
        best_matrix = None
        assigned = [(j, m) for j, m in zip(*np.nonzero(b))]
        free_users = [j for j in range(n_users) if not b[j].any()]
        candidates = []
        for j, m in assigned:
            drop = b.copy()
            drop[j, m] = 0
            candidates.append(drop)
            for u in free_users:  # hand the seat to an unassigned user
                swap = drop.copy()
                swap[u, m] = 1
                candidates.append(swap)
            for m2 in available:  # take the user to another channel
                if m2 != m and b[:, m2].sum() < max_per_channel:
                    move = drop.copy()
                    move[j, m2] = 1
                    candidates.append(move)
        for matrix in candidates:
            val = value(matrix)
            if val is not None and val > best_val:
                best_val = val
                best_matrix = matrix
        if best_matrix is not None:
            b = best_matrix
            base = best_val
            improved = True
            _check_feasible(b, available, max_per_channel)
    return AllocationResult(allocation=b, objective=base,
                            marginal_gains=gains, sequence=sequence,
                            grow_objective=grow_objective)


def brute_force_allocation(available: Sequence[int], n_users: int,
                           evaluator: Evaluator, max_per_channel: int,
                           n_channels: Optional[int] = None) -> AllocationResult:
    """Exact argmax over every feasible assignment (small instances only)."""
    available = sorted(available)
    if n_users > MAX_BRUTE_USERS or len(available) > MAX_BRUTE_CHANNELS:
        raise CapacityLimitError(
            f"brute force limited to {MAX_BRUTE_USERS} users and "
            f"{MAX_BRUTE_CHANNELS} channels, got {n_users}/{len(available)}")
    m_total = n_channels if n_channels is not None else (max(available) + 1 if available else 1)
    b = np.zeros((n_users, m_total), dtype=np.int64)
    counts = {m: 0 for m in available}
    best_val = -math.inf
    best_b = b.copy()

    def descend(j: int):
        nonlocal best_val, best_b
        if j == n_users:
            val = evaluator(b)
            if val > best_val:
                best_val = val
                best_b = b.copy()
            return
        descend(j + 1)  # user j unassigned
        for m in available:
            if counts[m] >= max_per_channel:
                continue
            b[j, m] = 1
            counts[m] += 1
            descend(j + 1)
            b[j, m] = 0
            counts[m] -= 1

    descend(0)
    return AllocationResult(allocation=best_b, objective=best_val,
                            marginal_gains=[], sequence=[])


def expected_competitive_ratio(eta: float, n_channels: int) -> float:
    """E[1/|available|] under i.i.d. busy channels; the |A|=0 term counts as 1.

    eta^M + sum_n (1/n) C(M, n) eta^(M-n) (1-eta)^n over n = 1..M.
    """
    if n_channels < 1:
        raise ValueError(f"n_channels={n_channels} must be >= 1")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta={eta} outside [0, 1]")
    total = eta ** n_channels
    for n in range(1, n_channels + 1):
        total += (math.comb(n_channels, n) / n
                  * eta ** (n_channels - n) * (1.0 - eta) ** n)
    return total


def channel_condition(per_channel_gains: np.ndarray) -> np.ndarray:
    """Total received power proxy sum_k H[k,j,m]^2, shape (N, M)."""
    h = np.asarray(per_channel_gains, dtype=float)
    return (h ** 2).sum(axis=0)


def heuristic1(available: Sequence[int], metric: np.ndarray) -> list[ScheduleEntry]:
    """Every user joins its best available channel; co-users share the slot."""
    available = sorted(available)
    if not available:
        return []
    n_users = metric.shape[0]
    picks = []
    for j in range(n_users):
        best_m = max(available, key=lambda m: (metric[j, m], -m))
        picks.append((j, best_m))
    counts: dict[int, int] = {}
    for _, m in picks:
        counts[m] = counts.get(m, 0) + 1
    return [ScheduleEntry(user=j, channel=m, share=1.0 / counts[m]) for j, m in picks]


def heuristic2(available: Sequence[int], metric: np.ndarray) -> list[ScheduleEntry]:
    """One best user per available channel, full slot each.

    Greedy matching on the condition metric; ties break lexicographically.
    """
    available = sorted(available)
    n_users = metric.shape[0]
    users_left = list(range(n_users))
    channels_left = list(available)
    entries = []
    while users_left and channels_left:
        best = None
        best_val = -math.inf
        for j in users_left:
            for m in channels_left:
                if metric[j, m] > best_val:
                    best_val = metric[j, m]
                    best = (j, m)
        j, m = best
        entries.append(ScheduleEntry(user=j, channel=m, share=1.0))
        users_left.remove(j)
        channels_left.remove(m)
    return entries
