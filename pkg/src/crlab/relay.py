"""Decoding rates of the three transmission strategies over fading links.

A frame decodes when the received SNR clears the threshold ``kappa``.  Path
gains are exponentially distributed (Rayleigh amplitudes) with per-hop means,
so the two-hop decode-and-forward rate is a product of complementary CDFs and
the amplify-and-forward rate is an integral over the first-hop gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .channel import FadingModel, gain_ccdf
from .errors import QuadratureError

AF_ABS_TOL = 1e-6
_WEIGHT_CUTOFF = -math.log(1e-12)  # exponential weight below 1e-12 past here


@dataclass(frozen=True)
class RelayLink:
    p_s: float          # transmitter power
    p_r: float          # relay power
    noise_relay: float  # sigma_r^2
    noise_dest: float   # sigma_d^2
    mean_g0: float      # direct-link mean gain
    mean_g1: float      # transmitter->relay mean gain
    mean_g2: float      # relay->receiver mean gain
    kappa: float        # SNR decoding threshold

    def __post_init__(self):
        for name in ("p_s", "p_r", "noise_relay", "noise_dest",
                     "mean_g0", "mean_g1", "mean_g2", "kappa"):
            v = getattr(self, name)
            if not v > 0.0:
                raise ValueError(f"{name}={v} must be > 0")


def decoding_rate_df(link: RelayLink) -> float:
    """Both hops clear kappa: ccdf(sigma_r^2 k / P_s) * ccdf(sigma_d^2 k / P_r)."""
    hop1 = gain_ccdf(FadingModel(link.mean_g1), link.noise_relay * link.kappa / link.p_s)
    hop2 = gain_ccdf(FadingModel(link.mean_g2), link.noise_dest * link.kappa / link.p_r)
    return hop1 * hop2


def decoding_rate_dl(link: RelayLink) -> float:
    """Direct link only: ccdf(sigma_d^2 kappa / P_s) on the direct gain."""
    return gain_ccdf(FadingModel(link.mean_g0), link.noise_dest * link.kappa / link.p_s)


def decoding_rate_af(link: RelayLink) -> float:
    """Amplified-pipeline rate, integrated over the first-hop gain.

    Evaluates the second-hop ccdf at the amplification-dependent requirement
    and integrates against the first-hop exponential density.  The integrand
    is smooth and rapidly decaying; the upper limit truncates where the
    exponential weight drops below 1e-12.
    """
    g1, g2 = link.mean_g1, link.mean_g2
    scale = link.noise_dest * link.kappa / (link.p_s * link.p_r)

    def integrand(x: float) -> float:
        if x <= 0.0:
            return 0.0
        need = (link.p_s * x + link.noise_relay) * scale / x
        return math.exp(-need / g2) * math.exp(-x / g1) / g1

    upper = g1 * _WEIGHT_CUTOFF
    # split at the boundary layer where the second-hop requirement relaxes
    knee = link.noise_relay * scale / g2
    split = min(max(1e3 * knee, 1e-12 * upper), 0.5 * upper)
    value = 0.0
    abserr = 1e-12  # truncated tail mass
    for lo, hi in ((0.0, split), (split, upper)):
        part, err = quad(integrand, lo, hi, epsabs=AF_ABS_TOL / 20, limit=400)
        value += part
        abserr += err
    if abserr > AF_ABS_TOL:
        raise QuadratureError(
            f"AF rate quadrature error {abserr:.2e} exceeds {AF_ABS_TOL:.0e}")
    return min(value, 1.0)
