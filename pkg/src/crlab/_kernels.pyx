# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: slotted relay simulation and the beamforming subproblem.

The pure-Python twin lives in ``_kernels_py``; both consume random draws in
exactly the same order from the supplied bit generators, so a given seed
produces identical results on either backend.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, sqrt

import numpy as np

cimport numpy as cnp
from numpy.random cimport bitgen_t

cnp.import_array()

DEF MAX_CHANNELS = 32
DEF MAX_DIM = 16

cdef double LN2 = 0.6931471805599453


cdef inline double _u(bitgen_t *bg) noexcept nogil:
    return bg.next_double(bg.state)


def sim_run(env_bitgen, frame_bitgen, Py_ssize_t n_pairs, int strategy,
            double[::1] lam, double[::1] mu, double[::1] eta,
            double[:, ::1] eps, double[:, ::1] dlt,
            cnp.int64_t[::1] n_sensors,
            cnp.int8_t[:, ::1] acc_odd, cnp.int8_t[:, ::1] acc_even,
            int n_links, double[::1] decode_rates):
    """Simulate ``n_pairs`` odd/even slot pairs for one seed and strategy.

    ``acc_odd[m, idx]`` / ``acc_even[m, idx]`` give the precomputed access
    decision for sensing-outcome index ``idx`` (bit i = reading of sensor i).
    Strategy codes: 0 = DF, 1 = AF, 2 = DL.  Returns (delivered_frames,
    collisions_per_channel, busy_slots_per_channel).
    """
    cdef Py_ssize_t m_count = lam.shape[0]
    if m_count > MAX_CHANNELS:
        raise ValueError(f"at most {MAX_CHANNELS} channels supported by the kernel")

    cdef bitgen_t *env = <bitgen_t *> PyCapsule_GetPointer(env_bitgen.capsule, "BitGenerator")
    cdef bitgen_t *frm = <bitgen_t *> PyCapsule_GetPointer(frame_bitgen.capsule, "BitGenerator")

    collisions_arr = np.zeros(m_count, dtype=np.int64)
    busy_arr = np.zeros(m_count, dtype=np.int64)
    cdef cnp.int64_t[::1] collisions = collisions_arr
    cdef cnp.int64_t[::1] busy = busy_arr

    cdef int s[MAX_CHANNELS]
    cdef int s_od[MAX_CHANNELS]
    cdef int a_od[MAX_CHANNELS]
    cdef double p_rts = 1.0 / n_links
    cdef Py_ssize_t pair, m, i, k
    cdef int theta, acc, n_od, n_ev, n_rts, cand, winner, f
    cdef long long delivered = 0
    cdef long long idx
    cdef double u, rate

    with nogil:
        for m in range(m_count):
            s[m] = 1 if _u(env) < eta[m] else 0
        for pair in range(n_pairs):
            # odd slot: channel evolution, sensing, access decisions
            for m in range(m_count):
                u = _u(env)
                if s[m] == 0:
                    s[m] = 0 if u < lam[m] else 1
                else:
                    s[m] = 0 if u < mu[m] else 1
            n_od = 0
            for m in range(m_count):
                idx = 0
                for i in range(n_sensors[m]):
                    u = _u(env)
                    if s[m] == 0:
                        theta = 1 if u < eps[m, i] else 0
                    else:
                        theta = 0 if u < dlt[m, i] else 1
                    if theta:
                        idx |= (<long long> 1) << i
                acc = acc_odd[m, idx]
                a_od[m] = acc
                s_od[m] = s[m]
                busy[m] += s[m]
                if acc and s[m] == 0:
                    n_od += 1
            # contention: winner keeps its channels for both slots
            n_rts = 0
            cand = 0
            for k in range(n_links):
                if _u(env) < p_rts:
                    n_rts += 1
                    cand = <int> k
            winner = cand if n_rts == 1 else -1
            if winner >= 0:
                for m in range(m_count):
                    if s_od[m] == 1 and a_od[m]:
                        collisions[m] += 1
            # even slot
            for m in range(m_count):
                u = _u(env)
                if s[m] == 0:
                    s[m] = 0 if u < lam[m] else 1
                else:
                    s[m] = 0 if u < mu[m] else 1
            n_ev = 0
            for m in range(m_count):
                idx = 0
                for i in range(n_sensors[m]):
                    u = _u(env)
                    if s[m] == 0:
                        theta = 1 if u < eps[m, i] else 0
                    else:
                        theta = 0 if u < dlt[m, i] else 1
                    if theta:
                        idx |= (<long long> 1) << i
                acc = acc_even[m, idx]
                busy[m] += s[m]
                if acc:
                    if s[m] == 0:
                        n_ev += 1
                    elif winner >= 0:
                        collisions[m] += 1
            # frame delivery
            if winner >= 0:
                if strategy == 0:
                    f = n_od if n_od < n_ev else n_ev
                elif strategy == 1:
                    f = n_od // 2 + n_ev // 2
                else:
                    f = n_od + n_ev
                rate = decode_rates[winner]
                for i in range(f):
                    if _u(frm) < rate:
                        delivered += 1

    return int(delivered), collisions_arr, busy_arr


def subproblem_ascent(double[::1] c0, double[:, ::1] quad, double[::1] u_dir,
                      double p_succ, double w, double amp, double n0,
                      double step0, double tol, Py_ssize_t max_iter, double c_cap):
    """Gradient ascent on one user's Lagrangian over its reduced coefficients.

    Maximizes ``p*ln(w + amp*log2(1 + (u.c)^2/n0)) + (1-p)*ln(w) - c'Qc``.
    The step is halved whenever a trial step regresses the objective and
    grown mildly after accepted steps.  Returns (c, iterations, grad_norm,
    objective, bounded); ``bounded`` is False when ``|c|`` escaped past
    ``c_cap`` (vanishing power penalty).
    """
    cdef Py_ssize_t r = c0.shape[0]
    if r > MAX_DIM:
        raise ValueError(f"at most {MAX_DIM} coefficients supported by the kernel")

    cdef double c[MAX_DIM]
    cdef double g[MAX_DIM]
    cdef double trial[MAX_DIM]
    cdef Py_ssize_t l, j, it
    cdef double s, lam_val, pen, obj, tobj, gu, gnorm2, step, norm2
    cdef bint bounded = True
    cdef bint fresh_grad

    for l in range(r):
        c[l] = c0[l]

    with nogil:
        obj = _sub_obj(c, quad, u_dir, p_succ, w, amp, n0, r)
        step = step0
        it = 0
        fresh_grad = True
        gnorm2 = 0.0
        while it < max_iter:
            if fresh_grad:
                s = 0.0
                for l in range(r):
                    s += u_dir[l] * c[l]
                lam_val = amp * log(1.0 + s * s / n0) / LN2
                gu = p_succ * amp * (2.0 * s / n0) / ((1.0 + s * s / n0) * LN2 * (w + lam_val))
                gnorm2 = 0.0
                for l in range(r):
                    g[l] = gu * u_dir[l]
                    for j in range(r):
                        g[l] -= 2.0 * quad[l, j] * c[j]
                    gnorm2 += g[l] * g[l]
                fresh_grad = False
            if gnorm2 < tol * tol:
                break
            for l in range(r):
                trial[l] = c[l] + step * g[l]
            tobj = _sub_obj(trial, quad, u_dir, p_succ, w, amp, n0, r)
            if tobj > obj:
                for l in range(r):
                    c[l] = trial[l]
                obj = tobj
                step = step * 1.25 if step < 1e6 else step
                fresh_grad = True
                norm2 = 0.0
                for l in range(r):
                    norm2 += c[l] * c[l]
                if norm2 > c_cap * c_cap:
                    bounded = False
                    it += 1
                    break
            else:
                step *= 0.5
                if step < 1e-18:
                    break
            it += 1

    out = np.empty(r, dtype=np.float64)
    for l in range(r):
        out[l] = c[l]
    return out, int(it), sqrt(gnorm2), obj, bool(bounded)


cdef double _sub_obj(double *c, double[:, ::1] quad, double[::1] u_dir,
                     double p_succ, double w, double amp, double n0,
                     Py_ssize_t r) noexcept nogil:
    cdef Py_ssize_t l, j
    cdef double s = 0.0
    cdef double pen = 0.0
    cdef double lam_val
    for l in range(r):
        s += u_dir[l] * c[l]
    for l in range(r):
        for j in range(r):
            pen += c[l] * quad[l, j] * c[j]
    lam_val = amp * log(1.0 + s * s / n0) / LN2
    return p_succ * log(w + lam_val) + (1.0 - p_succ) * log(w) - pen
