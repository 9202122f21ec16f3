"""Interference alignment core: zero-forcing bases and the reduced variables.

Each transmitter k sends a weighted mixture sum_j a[k,j] X_j.  User j decodes
its own signal when the weights of every other user are orthogonal to j's
gain column (zero-forcing).  The weight vector a_j therefore lives in the
null space of the other users' gains; a basis for that space has width
r = K - N + 1 and can be built once for all users: K - N shared vectors from
the null space of G^T plus one per-user vector obtained by deflating G_j
against the orthogonalized other columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import RankDeficiencyError, SingularMatrixError

COND_LIMIT = 1e8
_REORTH_RATIO = 1e-3  # re-orthogonalize when a projection removes >99.9% of the norm


@dataclass(frozen=True)
class NullSpaceBasis:
    """Columns spanning the zero-forcing space of one user.

    The first K-N columns are shared across users (null space of G^T); the
    last column is the user-specific deflated gain.
    """

    matrix: np.ndarray  # (K, r)

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    @property
    def shared_prefix(self) -> np.ndarray:
        return self.matrix[:, :-1]

    @property
    def last(self) -> np.ndarray:
        return self.matrix[:, -1]


def feasibility(n_users: int, n_transmitters: int) -> bool:
    """Zero-forcing decodes all users iff N <= K."""
    return n_users <= n_transmitters


def two_by_two_alignment(gains: np.ndarray) -> np.ndarray:
    """Weight matrix (G^T)^-1 for the two-transmitter, two-user case."""
    gains = np.asarray(gains, dtype=float)
    if gains.shape != (2, 2):
        raise ValueError(f"expected a 2x2 gain matrix, got {gains.shape}")
    gt = gains.T
    if np.linalg.cond(gt) > COND_LIMIT:
        raise SingularMatrixError(f"gain matrix transpose is singular: {gains}")
    return np.linalg.inv(gt)


def _check_rank(gains: np.ndarray):
    k, n = gains.shape
    if n > k:
        raise RankDeficiencyError(n - 1, f"{n} users exceed {k} transmitters")
    if n == 1:
        if not np.any(gains[:, 0]):
            raise RankDeficiencyError(0, "gain column 0 is zero")
        return
    if np.linalg.cond(gains) > COND_LIMIT:
        # name the first column expressible through its predecessors
        for j in range(n):
            others = np.delete(gains, j, axis=1)
            coef, _, _, _ = np.linalg.lstsq(others, gains[:, j], rcond=None)
            residual = np.linalg.norm(others @ coef - gains[:, j])
            if residual <= 1e-8 * max(np.linalg.norm(gains[:, j]), 1.0):
                raise RankDeficiencyError(j)
        raise RankDeficiencyError(n - 1, "gain matrix numerically rank deficient")


def _orthogonalize(columns: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt with a second pass on heavy cancellation."""
    out = columns.astype(float).copy()
    n = out.shape[1]
    for i in range(n):
        v = out[:, i]
        before = np.linalg.norm(v)
        for j in range(i):
            q = out[:, j]
            v = v - (v @ q) / (q @ q) * q
        if np.linalg.norm(v) < _REORTH_RATIO * before:
            for j in range(i):
                q = out[:, j]
                v = v - (v @ q) / (q @ q) * q
        out[:, i] = v
    return out


def _deflate(vector: np.ndarray, against: np.ndarray) -> np.ndarray:
    v = vector.astype(float).copy()
    before = np.linalg.norm(v)
    for j in range(against.shape[1]):
        q = against[:, j]
        v = v - (v @ q) / (q @ q) * q
    if np.linalg.norm(v) < _REORTH_RATIO * before:
        for j in range(against.shape[1]):
            q = against[:, j]
            v = v - (v @ q) / (q @ q) * q
    return v


def compute_bases(gains: np.ndarray) -> list[NullSpaceBasis]:
    """Zero-forcing basis for every user of a K x N gain matrix.

    The shared prefix solves G^T x = 0 (empty when K = N); the per-user last
    column deflates G_j against the orthogonalized remaining columns, so it
    is orthogonal to every other user's gains but not to the user's own.
    """
    gains = np.asarray(gains, dtype=float)
    k, n = gains.shape
    _check_rank(gains)
    prefix = null_space(gains.T) if k > n else np.zeros((k, 0))
    if prefix.shape[1] != k - n:
        raise RankDeficiencyError(n - 1, "null space width inconsistent with rank")
    bases = []
    for j in range(n):
        others = np.delete(gains, j, axis=1)
        if others.shape[1]:
            omega = _orthogonalize(others)
            last = _deflate(gains[:, j], omega)
        else:
            last = gains[:, j].astype(float)
        bases.append(NullSpaceBasis(np.column_stack([prefix, last])))
    return bases


def effective_gain(allocation: np.ndarray, per_channel_gains: np.ndarray) -> np.ndarray:
    """Collapse per-channel gains H (K, N, M) through a selection b (N, M)."""
    b = np.asarray(allocation)
    h = np.asarray(per_channel_gains, dtype=float)
    if b.ndim != 2 or h.ndim != 3 or h.shape[1:] != b.shape:
        raise ValueError(f"shape mismatch: allocation {b.shape}, gains {h.shape}")
    if (b.sum(axis=1) > 1).any():
        raise ValueError("a user cannot receive from more than one channel")
    return np.einsum("jm,kjm->kj", b.astype(float), h)


def zero_forcing_residual(weights: np.ndarray, gains: np.ndarray) -> float:
    """max_j!=n |sum_k a[k,j] G[k,n]|, the cross-talk left by the weights."""
    cross = weights.T @ gains  # (N, N); diagonal is the useful signal
    off = cross - np.diag(np.diag(cross))
    return float(np.abs(off).max())


def psnr_increase(c_last: float, basis: NullSpaceBasis, gain_column: np.ndarray,
                  beta: float, bandwidth: float, gop_slots: float,
                  noise_power: float) -> float:
    """Per-slot PSNR gain (dB) carried by the user-specific coefficient.

    Only the last basis column couples to the user's own gain column, so the
    achieved rate depends on the single coefficient c_last.
    """
    signal = c_last * float(basis.last @ np.asarray(gain_column, dtype=float))
    rate = bandwidth / gop_slots * np.log2(1.0 + signal * signal / noise_power)
    return beta * rate
