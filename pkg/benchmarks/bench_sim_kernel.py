#!/usr/bin/env python3
"""Benchmark the compiled kernels against their pure-Python twins.

Runs the slotted relay simulation and the beamforming subproblem on
identical inputs through both backends and reports wall times.  The two
backends consume identical random streams, so the outputs are also checked
for agreement.
"""

import time

import numpy as np
from numpy.random import PCG64, SeedSequence

from crlab import _backend
from crlab.access import Strategy
from crlab.channel import MarkovChannelModel
from crlab.sensing import SensorProfile
from crlab.simulator import ScenarioConfig, _decision_tables, _pack_arrays


def bench_sim(backend, n_pairs=20000, repeats=3):
    cfg = ScenarioConfig(
        models=[MarkovChannelModel.from_rates(0.7, 0.2)] * 5,
        sensors=[[SensorProfile(0.23, 0.23)] * 5] * 5,
        gamma=0.08, n_links=7, packet_bits=1000, slot_seconds=1e-3,
        horizon_slots=2 * n_pairs, seeds=[0],
        decode_override={s: 0.9 for s in Strategy})
    lam, mu, eta, eps, dlt, ns = _pack_arrays(cfg)
    acc_odd, acc_even = _decision_tables(cfg)
    rates = cfg.decode_rates(Strategy.DF)
    best = float("inf")
    result = None
    for _ in range(repeats):
        env = PCG64(SeedSequence([7, 11]))
        frm = PCG64(SeedSequence([7, 13]))
        start = time.perf_counter()
        result = backend.sim_run(env, frm, n_pairs, 0, lam, mu, eta, eps, dlt,
                                 ns, acc_odd, acc_even, 7, rates)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_subproblem(backend, repeats=200):
    rng = np.random.default_rng(5)
    r = 3
    basis = rng.normal(size=(4, r))
    quad = basis.T @ (rng.uniform(0.2, 1.0, 4)[:, None] * basis)
    u_dir = rng.normal(size=r)
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = backend.subproblem_ascent(
            np.full(r, 0.8), np.ascontiguousarray(quad), u_dir,
            0.7, 31.0, 0.32, 1e-2, 1e-2, 1e-8, 20000, 1e8)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    backends = {"python": _backend.get_backend("python")}
    try:
        backends["cython"] = _backend.get_backend("cython")
    except ImportError:
        print("compiled kernel unavailable; benchmarking the Python twin only")

    print(f"active backend: {_backend.BACKEND}\n")
    sim_times = {}
    sim_out = {}
    for name, mod in backends.items():
        sim_times[name], sim_out[name] = bench_sim(mod)
        print(f"slot simulation  [{name:6s}] {sim_times[name] * 1e3:8.1f} ms "
              f"for 20000 slot pairs")
    sub_times = {}
    sub_out = {}
    for name, mod in backends.items():
        sub_times[name], sub_out[name] = bench_subproblem(mod)
        print(f"subproblem ascent[{name:6s}] {sub_times[name] * 1e6:8.1f} us "
              f"per solve")

    if len(backends) == 2:
        assert sim_out["cython"][0] == sim_out["python"][0], "backend divergence"
        assert np.allclose(sub_out["cython"][0], sub_out["python"][0], atol=1e-9)
        print(f"\nspeedup: simulation x{sim_times['python'] / sim_times['cython']:.1f}, "
              f"subproblem x{sub_times['python'] / sub_times['cython']:.1f} "
              f"(outputs agree)")


if __name__ == "__main__":
    main()
