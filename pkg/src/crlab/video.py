"""Scalable-video quality model and per-GOP streaming sessions.

Reconstructed quality grows linearly with received rate (W = alpha + beta*R,
rate in Mb/s), so each successfully received slot adds a per-user PSNR
increment that depends on the beamforming weights.  A session runs one group
of pictures: every slot the base station and relays sense the channels,
channels are assigned (aligned transmission, or one of two schedule
heuristics), the per-slot optimizer allocates power, and per-user Bernoulli
successes advance the PSNR state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.random import PCG64, SeedSequence

from .allocation import ScheduleEntry, channel_condition, greedy_select, heuristic1, heuristic2
from .channel import MarkovChannelModel
from .errors import ConfigError
from .sensing import SensorProfile, access_probability, iterative_availability
from .solver import BeamformingProblem, SolveReport, SolverOptions, solve

LN2 = 0.6931471805599453
RATE_UNIT = 1e6  # quality model slope is per Mb/s

PROPOSED = "proposed"
HEURISTIC1 = "heuristic1"
HEURISTIC2 = "heuristic2"
SCHEMES = (PROPOSED, HEURISTIC1, HEURISTIC2)

_ENV_STREAM, _GAIN_STREAM, _SCHEME_STREAM = 21, 23, 31


@dataclass(frozen=True)
class VideoModel:
    alpha: float  # PSNR (dB) at zero rate
    beta: float   # dB per Mb/s
    name: str = ""

    def __post_init__(self):
        if not self.beta >= 0.0:
            raise ValueError(f"beta={self.beta} must be >= 0")

    def psnr(self, rate_mbps: float) -> float:
        return self.alpha + self.beta * rate_mbps


@dataclass
class SessionState:
    psnr: np.ndarray  # per-user w (dB), non-decreasing within a GOP
    slot: int
    gop_slots: int
    bandwidth: float     # Hz
    noise_power: float


@dataclass
class StreamScenario:
    n_users: int
    n_transmitters: int
    n_channels: int
    eta: float
    gamma: float
    videos: list[VideoModel]
    gop_slots: int = 10
    bandwidth_hz: float = 1e6
    noise_power: float = 1e-2
    p_max: float = 10.0
    gain_mean_power: float = 1.0
    mode: str = "single"          # single | multi-nobond | bonding
    switching: float = 0.5
    sensors_per_channel: Optional[int] = None  # defaults to n_transmitters
    false_alarm: float = 0.3
    miss_detection: float = 0.3
    solver_options: SolverOptions = field(default_factory=lambda: SolverOptions(
        conv_tol=1e-4, inner_tol=1e-6, inner_cap=4000, max_outer=3000))

    def __post_init__(self):
        if self.mode not in ("single", "multi-nobond", "bonding"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "single" and self.n_channels != 1:
            raise ConfigError("single-channel mode requires n_channels == 1")
        if self.mode == "single" and self.n_users > self.n_transmitters:
            raise ConfigError("single channel cannot serve more users than transmitters")
        if len(self.videos) != self.n_users:
            raise ConfigError("one video model per user required")
        if self.sensors_per_channel is None:
            self.sensors_per_channel = self.n_transmitters
        if not 0.0 <= self.eta < 1.0:
            raise ConfigError(f"eta={self.eta} outside [0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma={self.gamma} outside (0, 1)")

    @property
    def amp(self) -> np.ndarray:
        """Per-user log2 coefficient of the PSNR increment (dB per log2 unit)."""
        rate_scale = self.bandwidth_hz / RATE_UNIT / self.gop_slots
        return np.array([v.beta for v in self.videos]) * rate_scale


@dataclass
class GopResult:
    final_psnr: dict          # scheme -> (N,) array
    mean_psnr: dict           # scheme -> float
    slot_objectives: list     # (t, {scheme: objective at the proposed state})
    bound_geo_mean: float     # implied bound on the geometric-mean final PSNR
    trace_rows: list          # proposed scheme: (t, user, channel, P, lambda, w)
    solver_trace: Optional[list] = None   # first multi-user solve, if requested
    availability_sizes: list = field(default_factory=list)


def success_probability(b_row: Sequence[int], access_probs: Sequence[float]) -> float:
    """Access probability of the user's assigned channel, 0 when unassigned."""
    row = np.asarray(b_row)
    if row.sum() > 1:
        raise ValueError("user assigned to more than one channel")
    hits = np.flatnonzero(row)
    return float(access_probs[hits[0]]) if len(hits) else 0.0


def slot_objective(psnr: np.ndarray, p_success: np.ndarray,
                   gains_db: np.ndarray) -> float:
    """Expected log-PSNR sum: P log(w + lambda) + (1 - P) log(w) per user."""
    w = np.asarray(psnr, dtype=float)
    if (w <= 0.0).any():
        raise ValueError("PSNR must be positive in the log-domain objective")
    p = np.asarray(p_success, dtype=float)
    lam = np.asarray(gains_db, dtype=float)
    return float(np.sum(p * np.log(w + lam) + (1.0 - p) * np.log(w)))


def advance_slot(state: SessionState, p_success: np.ndarray, gains_db: np.ndarray,
                 rng: np.random.Generator) -> SessionState:
    """Bernoulli per-user success adds the slot's PSNR increment."""
    if state.slot >= state.gop_slots:
        raise ValueError("GOP already finished")
    hits = rng.random(len(state.psnr)) < np.asarray(p_success)
    new_psnr = state.psnr + np.where(hits, np.asarray(gains_db, dtype=float), 0.0)
    return replace(state, psnr=new_psnr, slot=state.slot + 1)


def coherent_gain_db(scenario: StreamScenario, gains: np.ndarray, user: int,
                     channel: int, share: float) -> float:
    """Single-user slot gain: all transmitters at full power, time-shared."""
    amp = scenario.amp[user]
    amplitude = math.sqrt(scenario.p_max) * float(gains[:, user, channel].sum())
    return share * amp * math.log1p(amplitude ** 2 / scenario.noise_power) / LN2


def _schedule_vectors(scenario: StreamScenario, gains: np.ndarray,
                      schedule: list[ScheduleEntry], access_probs: np.ndarray):
    n = scenario.n_users
    p = np.zeros(n)
    lam = np.zeros(n)
    chan = np.full(n, -1, dtype=int)
    for entry in schedule:
        p[entry.user] = access_probs[entry.channel]
        lam[entry.user] = coherent_gain_db(scenario, gains, entry.user,
                                           entry.channel, entry.share)
        chan[entry.user] = entry.channel
    return p, lam, chan


class _GroupSolver:
    """Memoized per-(channel, user-group) solves within one slot."""

    def __init__(self, scenario: StreamScenario, gains: np.ndarray,
                 psnr: np.ndarray, access_probs: np.ndarray, slot_token: int):
        self.scenario = scenario
        self.gains = gains
        self.psnr = psnr
        self.access_probs = access_probs
        self.slot_token = slot_token
        self.cache: dict = {}
        self.mu_cache: dict = {}
        self.first_report: Optional[SolveReport] = None

    def solve_group(self, channel: int, users: tuple) -> np.ndarray:
        """Per-user PSNR increments (dB) for one channel's group."""
        key = (channel, users)
        if key in self.cache:
            return self.cache[key]
        sc = self.scenario
        problem = BeamformingProblem(
            gains=self.gains[:, list(users), channel],
            p_success=np.full(len(users), self.access_probs[channel]),
            psnr_now=self.psnr[list(users)],
            amp=sc.amp[list(users)],
            noise_power=sc.noise_power,
            p_max=sc.p_max)
        rng = np.random.Generator(PCG64(SeedSequence(
            [self.slot_token, channel, *users])))
        mu_init = None
        for dropped in users:  # dual warm start from a cached parent group
            parent = tuple(u for u in users if u != dropped)
            if parent and (channel, parent) in self.mu_cache:
                mu_init = self.mu_cache[(channel, parent)]
                break
        report = solve(problem, sc.solver_options, rng=rng, mu_init=mu_init)
        if report.mu is not None:
            self.mu_cache[key] = report.mu
        if self.first_report is None and len(users) > 1:
            self.first_report = report
        signals = (report.weights * problem.gains).sum(axis=0)
        lam = sc.amp[list(users)] * np.log1p(signals ** 2 / sc.noise_power) / LN2
        self.cache[key] = lam
        return lam

    def evaluator(self, available: Sequence[int]):
        """Improvement-normalized objective of a partial allocation."""
        log_w = np.log(self.psnr)

        def phi(b: np.ndarray) -> float:
            total = 0.0
            for m in available:
                users = tuple(int(j) for j in np.flatnonzero(b[:, m]))
                if not users:
                    continue
                lam = self.solve_group(m, users)
                p = self.access_probs[m]
                w = self.psnr[list(users)]
                total += float(np.sum(p * np.log(w + lam) + (1.0 - p) * np.log(w)
                                      - np.log(w)))
            return total

        return phi


def _sense_slot(scenario: StreamScenario, states: np.ndarray,
                rng: np.random.Generator, profiles: list[SensorProfile]):
    """Readings -> posterior availability -> capped access probability."""
    m_count = scenario.n_channels
    n_sensors = scenario.sensors_per_channel
    draws = rng.random((m_count, n_sensors))
    access = np.zeros(m_count)
    for m in range(m_count):
        avail = 1.0 - scenario.eta  # prior before any reading
        for i, prof in enumerate(profiles):
            if states[m] == 0:
                reading = 1 if draws[m, i] < prof.false_alarm else 0
            else:
                reading = 0 if draws[m, i] < prof.miss_detection else 1
            avail = iterative_availability(avail, prof, reading)
        access[m] = access_probability(avail, scenario.gamma)
    return access


def run_gop(scenario: StreamScenario, seed: int,
            collect_solver_trace: bool = False) -> GopResult:
    """One GOP for every scheme, sharing the channel environment draws.

    Each scheme consumes its own success stream, so the proposed scheme and
    the heuristics see identical availability and gains but independent
    packet luck.
    """
    sc = scenario
    n, k, m_count = sc.n_users, sc.n_transmitters, sc.n_channels
    model = MarkovChannelModel.from_utilization(sc.eta, sc.switching)
    profiles = [SensorProfile(sc.false_alarm, sc.miss_detection)
                for _ in range(sc.sensors_per_channel)]

    env = np.random.Generator(PCG64(SeedSequence([seed, _ENV_STREAM])))
    gain_rng = np.random.Generator(PCG64(SeedSequence([seed, _GAIN_STREAM])))
    scheme_rng = {scheme: np.random.Generator(PCG64(SeedSequence([seed, _SCHEME_STREAM + i])))
                  for i, scheme in enumerate(SCHEMES)}

    gains = np.sqrt(gain_rng.exponential(sc.gain_mean_power, size=(k, n, m_count)))
    metric = channel_condition(gains)
    states = np.where(env.random(m_count) < sc.eta, 1, 0)

    w0 = np.array([v.alpha for v in sc.videos], dtype=float)
    state = {scheme: SessionState(psnr=w0.copy(), slot=0, gop_slots=sc.gop_slots,
                                  bandwidth=sc.bandwidth_hz, noise_power=sc.noise_power)
             for scheme in SCHEMES}

    slot_objectives = []
    trace_rows = []
    solver_trace = None
    avail_sizes = []
    bound_log = float(np.log(w0).sum())

    for t in range(sc.gop_slots):
        states = np.where(env.random(m_count) < np.where(states == 0, model.lam, model.mu),
                          0, 1)
        access = _sense_slot(sc, states, env, profiles)
        opened = env.random(m_count) < access
        available = [m for m in range(m_count) if opened[m]]
        avail_sizes.append(len(available))

        group = _GroupSolver(sc, gains, state[PROPOSED].psnr, access,
                             slot_token=seed * 1009 + t)

        # proposed allocation
        p_prop = np.zeros(n)
        lam_prop = np.zeros(n)
        chan_prop = np.full(n, -1, dtype=int)
        delta_phi = 0.0
        if available:
            if sc.mode == "single":
                users = tuple(range(n))
                lam_prop = group.solve_group(0, users)
                p_prop = np.full(n, access[0])
                chan_prop[:] = 0
                w = state[PROPOSED].psnr
                delta_phi = float(np.sum(p_prop * np.log(w + lam_prop)
                                         + (1 - p_prop) * np.log(w) - np.log(w)))
            elif sc.mode == "bonding":
                merged = gains[:, :, available].sum(axis=2)
                bonded_access = float(np.prod(access[available]))
                problem = BeamformingProblem(
                    gains=merged, p_success=np.full(n, bonded_access),
                    psnr_now=state[PROPOSED].psnr, amp=sc.amp,
                    noise_power=sc.noise_power, p_max=sc.p_max)
                rng = np.random.Generator(PCG64(SeedSequence([seed * 1009 + t, 997])))
                report = solve(problem, sc.solver_options, rng=rng)
                if group.first_report is None and n > 1:
                    group.first_report = report
                signals = (report.weights * merged).sum(axis=0)
                lam_prop = sc.amp * np.log1p(signals ** 2 / sc.noise_power) / LN2
                p_prop = np.full(n, bonded_access)
                chan_prop[:] = available[0]
            else:
                phi = group.evaluator(available)
                result = greedy_select(available, n, phi, max_per_channel=k,
                                       n_channels=m_count)
                delta_phi = result.objective
                for j in range(n):
                    hits = np.flatnonzero(result.allocation[j])
                    if len(hits):
                        m = int(hits[0])
                        chan_prop[j] = m
                        p_prop[j] = access[m]
                for m in available:
                    users = tuple(int(j) for j in np.flatnonzero(result.allocation[:, m]))
                    if users:
                        lam_users = group.solve_group(m, users)
                        lam_prop[list(users)] = lam_users
        bound_log += len(available) * delta_phi
        if collect_solver_trace and solver_trace is None and group.first_report is not None:
            solver_trace = group.first_report.trace

        # heuristic schedules (metric-based, independent of PSNR state)
        sched1 = heuristic1(available, metric) if available else []
        sched2 = heuristic2(available, metric) if available else []
        p_h1, lam_h1, chan_h1 = _schedule_vectors(sc, gains, sched1, access)
        p_h2, lam_h2, chan_h2 = _schedule_vectors(sc, gains, sched2, access)

        # per-slot comparison at the proposed scheme's state
        w_ref = state[PROPOSED].psnr
        slot_objectives.append((t, {
            PROPOSED: slot_objective(w_ref, p_prop, lam_prop),
            HEURISTIC1: slot_objective(w_ref, p_h1, lam_h1),
            HEURISTIC2: slot_objective(w_ref, p_h2, lam_h2),
        }))

        for scheme, (p_vec, lam_vec) in ((PROPOSED, (p_prop, lam_prop)),
                                         (HEURISTIC1, (p_h1, lam_h1)),
                                         (HEURISTIC2, (p_h2, lam_h2))):
            state[scheme] = advance_slot(state[scheme], p_vec, lam_vec,
                                         scheme_rng[scheme])
        for j in range(n):
            trace_rows.append((t, j, int(chan_prop[j]), float(p_prop[j]),
                               float(lam_prop[j]), float(state[PROPOSED].psnr[j])))

    final = {scheme: state[scheme].psnr for scheme in SCHEMES}
    return GopResult(
        final_psnr=final,
        mean_psnr={scheme: float(v.mean()) for scheme, v in final.items()},
        slot_objectives=slot_objectives,
        bound_geo_mean=float(math.exp(bound_log / n)),
        trace_rows=trace_rows,
        solver_trace=solver_trace,
        availability_sizes=avail_sizes)
