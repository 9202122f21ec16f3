"""Pure-Python twin of the compiled kernels.

Selected automatically when the extension is unavailable.  Consumes random
draws in exactly the same order as the compiled version (block draws from a
``Generator`` yield the same doubles as repeated scalar draws), so results
are bit-identical across backends for a given seed.
"""

from __future__ import annotations

import math

import numpy as np

LN2 = 0.6931471805599453


def sim_run(env_bitgen, frame_bitgen, n_pairs, strategy,
            lam, mu, eta, eps, dlt, n_sensors, acc_odd, acc_even,
            n_links, decode_rates):
    """See ``_kernels.sim_run``; same contract, numpy-vectorized per slot."""
    env = np.random.Generator(env_bitgen)
    frm = np.random.Generator(frame_bitgen)
    lam = np.asarray(lam)
    mu = np.asarray(mu)
    eta = np.asarray(eta)
    eps = np.asarray(eps)
    dlt = np.asarray(dlt)
    n_sensors = np.asarray(n_sensors)
    m_count = lam.shape[0]
    rows = np.arange(m_count)
    p_rts = 1.0 / n_links

    uniform_ns = bool((n_sensors == n_sensors[0]).all())
    ns0 = int(n_sensors[0])
    pow2 = 1 << np.arange(ns0, dtype=np.int64)
    pow2_ragged = [1 << np.arange(int(k), dtype=np.int64) for k in n_sensors]

    def sense(states, table):
        if uniform_ns:
            u = env.random((m_count, ns0))
            theta = np.where(states[:, None] == 0, u < eps[:, :ns0], u >= dlt[:, :ns0])
            idx = theta.astype(np.int64) @ pow2
        else:
            idx = np.empty(m_count, dtype=np.int64)
            for m in range(m_count):
                k = int(n_sensors[m])
                u = env.random(k)
                theta = (u < eps[m, :k]) if states[m] == 0 else (u >= dlt[m, :k])
                idx[m] = int(theta.astype(np.int64) @ pow2_ragged[m])
        return table[rows, idx].astype(bool)

    s = np.where(env.random(m_count) < eta, 1, 0)
    delivered = 0
    collisions = np.zeros(m_count, dtype=np.int64)
    busy = np.zeros(m_count, dtype=np.int64)

    for _ in range(n_pairs):
        s = np.where(env.random(m_count) < np.where(s == 0, lam, mu), 0, 1)
        acc_od = sense(s, acc_odd)
        s_od = s
        busy += s
        n_od = int(np.count_nonzero(acc_od & (s == 0)))

        rts = env.random(n_links) < p_rts
        winner = int(np.flatnonzero(rts)[0]) if int(rts.sum()) == 1 else -1
        if winner >= 0:
            collisions += (s_od == 1) & acc_od

        s = np.where(env.random(m_count) < np.where(s == 0, lam, mu), 0, 1)
        acc_ev = sense(s, acc_even)
        busy += s
        n_ev = int(np.count_nonzero(acc_ev & (s == 0)))
        if winner >= 0:
            collisions += (s == 1) & acc_ev

        if winner >= 0:
            if strategy == 0:
                frames = min(n_od, n_ev)
            elif strategy == 1:
                frames = n_od // 2 + n_ev // 2
            else:
                frames = n_od + n_ev
            if frames:
                delivered += int(np.count_nonzero(frm.random(frames) < decode_rates[winner]))

    return delivered, collisions, busy


def _sub_obj(c, quad, u_dir, p_succ, w, amp, n0):
    s = float(u_dir @ c)
    lam_val = amp * math.log(1.0 + s * s / n0) / LN2
    pen = float(c @ quad @ c)
    return p_succ * math.log(w + lam_val) + (1.0 - p_succ) * math.log(w) - pen


def subproblem_ascent(c0, quad, u_dir, p_succ, w, amp, n0,
                      step0, tol, max_iter, c_cap):
    """See ``_kernels.subproblem_ascent``; same contract and step policy."""
    c = np.array(c0, dtype=np.float64)
    quad = np.asarray(quad)
    u_dir = np.asarray(u_dir)
    obj = _sub_obj(c, quad, u_dir, p_succ, w, amp, n0)
    step = step0
    it = 0
    bounded = True
    fresh_grad = True
    g = np.zeros_like(c)
    gnorm2 = 0.0
    while it < max_iter:
        if fresh_grad:
            s = float(u_dir @ c)
            lam_val = amp * math.log(1.0 + s * s / n0) / LN2
            gu = p_succ * amp * (2.0 * s / n0) / ((1.0 + s * s / n0) * LN2 * (w + lam_val))
            g = gu * u_dir - 2.0 * (quad @ c)
            gnorm2 = float(g @ g)
            fresh_grad = False
        if gnorm2 < tol * tol:
            break
        trial = c + step * g
        tobj = _sub_obj(trial, quad, u_dir, p_succ, w, amp, n0)
        if tobj > obj:
            c = trial
            obj = tobj
            if step < 1e6:
                step *= 1.25
            fresh_grad = True
            if float(c @ c) > c_cap * c_cap:
                bounded = False
                it += 1
                break
        else:
            step *= 0.5
            if step < 1e-18:
                break
        it += 1
    return c, int(it), math.sqrt(gnorm2), obj, bool(bounded)
